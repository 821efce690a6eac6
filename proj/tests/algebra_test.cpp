#include <random>

#include <gtest/gtest.h>

#include "momentlimit/algebra.hpp"
#include "momentlimit/parse.hpp"
#include "oracles.hpp"

namespace
{

using namespace momentlimit;

Polynomial x(var_id i) { return Polynomial::variable(i); }

TEST(Support, ConstantHasEmptySupport)
{
    EXPECT_TRUE(support(Polynomial(1.0)).empty());
}

TEST(Support, ReadsVariablesOffTerms)
{
    EXPECT_EQ(support(x(3) * x(3) + x(7)), (VariableSet{3, 7}));
}

TEST(Support, CancellingTermsGiveZeroPolynomial)
{
    const Polynomial p = x(1) * x(1) - Polynomial(MultiIndex::variable(1, 2));
    EXPECT_TRUE(p.is_zero());
    EXPECT_TRUE(support(p).empty());
}

TEST(MultiIndex, CanonicalFormDropsZeroExponents)
{
    const MultiIndex m{{4, 0}, {2, 1}, {2, 2}};
    ASSERT_EQ(m.entries().size(), 1u);
    EXPECT_EQ(m.exponent(2), 3u);
    EXPECT_EQ(m.degree(), 3u);
    EXPECT_EQ(m.to_string(), "x2^3");
}

TEST(RestrictModule, KeepsGeneratorsSupportedInF)
{
    QuadraticModule q{{1.0 - x(1) * x(1), 1.0 - x(2) * x(2)}};
    const auto r = restrict_module(q, {1});
    ASSERT_EQ(r.generators.size(), 1u);
    EXPECT_EQ(r.generators[0], 1.0 - x(1) * x(1));
}

TEST(RestrictModule, MixedGeneratorDropsOut)
{
    QuadraticModule q{{x(1) * x(2)}};
    EXPECT_TRUE(restrict_module(q, {1}).generators.empty());
    // empty generator list means K = R^F
    EXPECT_TRUE(restrict_module(q, {1}).contains({{1, -5.0}}));
}

TEST(RestrictModule, EmptyModuleStaysEmpty)
{
    EXPECT_TRUE(restrict_module(QuadraticModule{}, {1, 2, 3}).generators.empty());
}

TEST(RestrictModule, MonotoneInF)
{
    QuadraticModule q{{1.0 - x(1) * x(1), x(2) - x(3), x(1) * x(2), 2.0 + x(4)}};
    const VariableSet f{1, 2}, g{1, 2, 3};
    const auto small = restrict_module(q, f).generators;
    const auto big = restrict_module(q, g).generators;
    for (const auto& p : small) EXPECT_NE(std::find(big.begin(), big.end(), p), big.end());
}

TEST(RestrictModule, MembershipDependsOnlyOnCoordinatesInF)
{
    QuadraticModule q{{1.0 - x(1) * x(1), x(2) - x(3)}};
    const auto r = restrict_module(q, {1});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 100; ++t)
    {
        Point p{{1, u(rng)}, {2, u(rng)}, {3, u(rng)}};
        Point p2 = p;
        p2[2] = u(rng);
        p2[3] = u(rng);
        EXPECT_EQ(r.contains(p), r.contains(p2));
    }
}

TEST(MonomialsUpTo, UnivariateDegreeTwo)
{
    const auto b = monomials_up_to({1}, 2);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0], MultiIndex{});
    EXPECT_EQ(b[1], MultiIndex::variable(1));
    EXPECT_EQ(b[2], MultiIndex::variable(1, 2));
}

TEST(MonomialsUpTo, BivariateDegreeOne)
{
    const auto b = monomials_up_to({1, 2}, 1);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[1], MultiIndex::variable(1));
    EXPECT_EQ(b[2], MultiIndex::variable(2));
}

TEST(MonomialsUpTo, BivariateDegreeTwoGradedLexOrder)
{
    const auto b = monomials_up_to({1, 2}, 2);
    ASSERT_EQ(b.size(), oracle::binomial(4, 2));
    std::vector<std::string> names;
    for (const auto& m : b) names.push_back(m.to_string());
    EXPECT_EQ(names, (std::vector<std::string>{"1", "x1", "x2", "x1^2", "x1*x2", "x2^2"}));
}

TEST(MonomialsUpTo, CountMatchesBinomialAndOrderIsStrict)
{
    // enumeration oracle: count dense exponent vectors of total degree <= n
    for (unsigned nv = 0; nv <= 4; ++nv)
    {
        std::vector<var_id> ids;
        for (unsigned k = 0; k < nv; ++k) ids.push_back(2 * k + 1);
        for (unsigned n = 0; n <= 5; ++n)
        {
            const auto b = monomials_up_to(VariableSet(ids), n);
            EXPECT_EQ(b.size(), oracle::binomial(nv + n, n)) << nv << " " << n;
            for (std::size_t k = 1; k < b.size(); ++k)
                EXPECT_TRUE(GradedLexLess{}(b[k - 1], b[k]));
        }
    }
}

TEST(Evaluate, Examples)
{
    EXPECT_DOUBLE_EQ(evaluate(x(1) * x(1) + 1.0, {{1, 2.0}}), 5.0);
    EXPECT_DOUBLE_EQ(evaluate(Polynomial(), {}), 0.0);
    EXPECT_DOUBLE_EQ(evaluate(x(1) * x(2) - x(3), {{1, 2.0}, {2, 3.0}, {3, 1.0}}), 5.0);
}

TEST(Evaluate, MissingCoordinateThrows)
{
    try
    {
        evaluate(x(1) + x(2), {{1, 1.0}});
        FAIL();
    }
    catch (const error& e)
    {
        EXPECT_EQ(e.code(), errc::missing_coordinate);
    }
}

TEST(Evaluate, RingHomomorphismProperty)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> var(1, 3), ex(0, 3), nterms(1, 4);
    std::uniform_real_distribution<double> c(-2, 2);
    auto random_poly = [&] {
        Polynomial p;
        for (int t = nterms(rng); t > 0; --t)
            p += Polynomial(MultiIndex{{static_cast<var_id>(var(rng)), static_cast<unsigned>(ex(rng))},
                                       {static_cast<var_id>(var(rng)), static_cast<unsigned>(ex(rng))}},
                            c(rng));
        return p;
    };
    for (int trial = 0; trial < 200; ++trial)
    {
        const Polynomial p = random_poly(), q = random_poly();
        const Point pt{{1, c(rng)}, {2, c(rng)}, {3, c(rng)}};
        const double ep = evaluate(p, pt), eq = evaluate(q, pt);
        EXPECT_NEAR(evaluate(p * q, pt), ep * eq, 1e-10 * (1 + std::abs(ep * eq)));
        EXPECT_NEAR(evaluate(p + q, pt), ep + eq, 1e-12 * (1 + std::abs(ep) + std::abs(eq)));
    }
}

TEST(Parse, ReadsTermsAndCollects)
{
    const Polynomial p = parse_polynomial("3*x1^2*x7 - 0.5");
    EXPECT_EQ(p, 3.0 * x(1) * x(1) * x(7) - 0.5);
    EXPECT_EQ(parse_polynomial(" 1 - x1 ^ 2 "), 1.0 - x(1) * x(1));
    EXPECT_EQ(parse_polynomial("x2 + X2 - 2*x_2"), Polynomial());
    EXPECT_EQ(parse_polynomial("-x3*2"), -2.0 * x(3));
    EXPECT_EQ(parse_polynomial("1e-3*x1"), 1e-3 * x(1));
}

TEST(Parse, RoundTripsThroughToString)
{
    const Polynomial p = 3.0 * x(1) * x(1) * x(7) - 0.5 + 0.25 * x(2);
    EXPECT_EQ(parse_polynomial(p.to_string()), p);
}

TEST(Parse, RejectsMalformedInput)
{
    for (const char* bad : {"", "x0", "3*", "x1^", "x1 x2", "2 + + x1", "y1"})
    {
        try
        {
            parse_polynomial(bad);
            ADD_FAILURE() << bad;
        }
        catch (const error& e)
        {
            EXPECT_EQ(e.code(), errc::parse_error) << bad;
        }
    }
}

TEST(CloseUnderUnion, AddsMissingUnions)
{
    const auto c = close_under_union({{1}, {2}, {3}});
    EXPECT_TRUE(is_union_closed(c));
    EXPECT_EQ(c.size(), 7u);
    EXPECT_EQ(c.front(), (VariableSet{1}));
    EXPECT_EQ(c.back(), (VariableSet{1, 2, 3}));
}

} // namespace
