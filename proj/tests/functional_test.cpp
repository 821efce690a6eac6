#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "momentlimit/functional.hpp"
#include "oracles.hpp"

namespace
{

using namespace momentlimit;

MultiIndex x(var_id i, unsigned e = 1) { return MultiIndex::variable(i, e); }

AtomicMeasure two_atoms()
{
    return AtomicMeasure({1}, {{{{1, -1.0}}, 0.5}, {{{1, 1.0}}, 0.5}});
}

TEST(Moment, GaussianFourthMoment)
{
    const auto l = MomentFunctional::gaussian_product({}, 1.0);
    EXPECT_DOUBLE_EQ(l.moment(x(1, 4)), oracle::gaussian_moment(4));
    EXPECT_DOUBLE_EQ(l.moment(x(1, 4)), 3.0);
}

TEST(Moment, GaussianMatchesDoubleFactorialOracle)
{
    const auto l = MomentFunctional::gaussian_product({{1, 1.0}, {2, 2.5}});
    for (unsigned a = 0; a <= 8; ++a)
        for (unsigned b = 0; b <= 8; ++b)
        {
            const double expect = oracle::gaussian_moment(a) * oracle::gaussian_moment(b, 2.5);
            EXPECT_NEAR(l.moment(MultiIndex{{1, a}, {2, b}}), expect, 1e-12 * std::max(1.0, expect));
        }
}

TEST(Moment, DiracAtOrigin)
{
    const auto l = MomentFunctional::dirac_product({});
    EXPECT_EQ(l.moment(MultiIndex{}), 1.0);
    EXPECT_EQ(l.moment(x(1)), 0.0);
    EXPECT_EQ(l.moment(MultiIndex{{2, 3}, {9, 1}}), 0.0);
}

TEST(Moment, AtomicOracleWeightedSum)
{
    const auto l = MomentFunctional::atomic(two_atoms());
    EXPECT_DOUBLE_EQ(l.moment(x(1, 3)), 0.0);
    EXPECT_DOUBLE_EQ(l.moment(x(1, 2)), 1.0);
}

TEST(Moment, UniformBox)
{
    const auto l = MomentFunctional::uniform_box_product({{1, 1.0}, {2, 2.0}});
    EXPECT_DOUBLE_EQ(l.moment(x(1, 2)), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(l.moment(x(2, 4)), 16.0 / 5.0);
    EXPECT_EQ(l.moment(x(2, 3)), 0.0);
}

TEST(Moment, UnlistedVariableWithoutFallbackThrows)
{
    const auto l = MomentFunctional::gaussian_product({{1, 1.0}});
    try
    {
        l.moment(x(2, 2));
        FAIL();
    }
    catch (const error& e)
    {
        EXPECT_EQ(e.code(), errc::unknown_variable);
    }
}

MomentTable small_table()
{
    MomentTable t;
    t.max_degree = 2;
    t.values[MultiIndex{}] = 1.0;
    t.values[x(1)] = 0.0;
    t.values[x(1, 2)] = 1.0;
    return t;
}

TEST(Moment, TableBeyondDegreeThrows)
{
    const auto l = MomentFunctional::table(small_table());
    try
    {
        l.moment(x(1, 3));
        FAIL();
    }
    catch (const error& e)
    {
        EXPECT_EQ(e.code(), errc::degree_exceeded);
    }
}

TEST(Moment, TableNeverFillsMissingEntries)
{
    const auto l = MomentFunctional::table(small_table());
    try
    {
        l.moment(x(2));
        FAIL();
    }
    catch (const error& e)
    {
        EXPECT_EQ(e.code(), errc::missing_moment);
    }
}

TEST(Moment, TableMustBeNormalized)
{
    auto t = small_table();
    t.values[MultiIndex{}] = 2.0;
    EXPECT_THROW(MomentFunctional::table(t), error);
}

TEST(Moment, LogValuedTableEntries)
{
    MomentTable t;
    t.max_degree = 4;
    t.values[MultiIndex{}] = 1.0;
    t.log_values[x(1, 4)] = 800.0;
    const auto l = MomentFunctional::table(t);
    EXPECT_EQ(l.log_moment(x(1, 4)), 800.0);
    EXPECT_TRUE(std::isinf(l.moment(x(1, 4))));
}

TEST(Moment, NormalizationForEverySource)
{
    const MomentFunctional sources[] = {
        MomentFunctional::gaussian_product({{1, 3.0}}),
        MomentFunctional::dirac_product({{1, 4.0}}),
        MomentFunctional::uniform_box_product({{1, 2.0}}),
        MomentFunctional::atomic(two_atoms()),
        MomentFunctional::table(small_table()),
    };
    for (const auto& l : sources) EXPECT_EQ(l.moment(MultiIndex{}), 1.0);
}

TEST(Riesz, Examples)
{
    const auto g = MomentFunctional::gaussian_product({}, 1.0);
    EXPECT_DOUBLE_EQ(riesz(g, Polynomial(x(1, 2)) + 2.0), 3.0);
    EXPECT_EQ(riesz(g, Polynomial()), 0.0);
    EXPECT_EQ(riesz(MomentFunctional::dirac_product({}), Polynomial(5.0)), 5.0);
}

TEST(Riesz, PropagatesDegreeExceeded)
{
    const auto l = MomentFunctional::table(small_table());
    EXPECT_THROW(riesz(l, Polynomial(x(1, 3)) + 1.0), error);
}

TEST(Riesz, AtomicSourceEqualsWeightedEvaluation)
{
    std::mt19937_64 rng(3);
    const auto atoms = oracle::random_atoms(rng, 4, 2);
    std::vector<Atom> list;
    for (std::size_t k = 0; k < 4; ++k)
        list.push_back({{{1, atoms.points[k][0]}, {2, atoms.points[k][1]}}, atoms.weights[k]});
    const AtomicMeasure mu({1, 2}, list);
    const auto l = MomentFunctional::atomic(mu);
    std::uniform_real_distribution<double> c(-1, 1);
    for (int trial = 0; trial < 50; ++trial)
    {
        Polynomial p;
        for (const auto& m : monomials_up_to({1, 2}, 4)) p += Polynomial(m, c(rng));
        double direct = 0.0;
        for (const auto& a : mu.atoms()) direct += a.weight * evaluate(p, a.point);
        EXPECT_NEAR(riesz(l, p), direct, 1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST(Restrict, AgreesWithParentOnSubalgebra)
{
    const auto l = MomentFunctional::gaussian_product({}, 1.0);
    const auto r = l.restrict({1});
    EXPECT_DOUBLE_EQ(r.moment(x(1, 6)), 15.0);
    EXPECT_EQ(r.moment(x(1, 6)), l.moment(x(1, 6)));
}

TEST(Restrict, RejectsOutsideSubalgebra)
{
    const auto r = MomentFunctional::gaussian_product({}, 1.0).restrict({1});
    try
    {
        r.moment(x(2, 2));
        FAIL();
    }
    catch (const error& e)
    {
        EXPECT_EQ(e.code(), errc::outside_subalgebra);
    }
}

TEST(Restrict, TowerProperty)
{
    const auto l = MomentFunctional::uniform_box_product({}, 1.5);
    const VariableSet f{1, 3}, fp{1, 2, 3};
    const auto twice = l.restrict(fp).restrict(f);
    const auto once = l.restrict(f);
    EXPECT_EQ(twice.scope(), once.scope());
    for (const auto& m : monomials_up_to(f, 5))
    {
        EXPECT_EQ(twice.moment(m), once.moment(m));
        EXPECT_EQ(l.restrict(fp).moment(m), once.moment(m));
    }
}

TEST(Cache, ConcurrentReadersSeeConsistentValues)
{
    const auto l = MomentFunctional::gaussian_product({}, 2.0);
    const auto basis = monomials_up_to({1, 2, 3}, 6);
    std::vector<std::vector<double>> seen(4);
    std::vector<std::thread> workers;
    for (int w = 0; w < 4; ++w)
        workers.emplace_back([&, w] {
            for (const auto& m : basis) seen[w].push_back(l.moment(m));
        });
    for (auto& t : workers) t.join();
    for (int w = 1; w < 4; ++w) EXPECT_EQ(seen[w], seen[0]);
}

} // namespace
