#ifndef MOMENTLIMIT_ASYMPTOTICS_HPP
#define MOMENTLIMIT_ASYMPTOTICS_HPP

///
/// \file asymptotics.hpp
///
/// Sufficient-condition diagnostics computed from moment growth: Carleman
/// partial sums per variable, syntactic Archimedean bounds with the growth
/// inequality L(X_i^{2n}) <= N_i^{2n}, the split of the variables into an
/// Archimedean part and a Carleman part, and tightness certificates built
/// from product boxes prod_i [-R_i, R_i].
///

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "projective.hpp"

namespace momentlimit
{

//------------------------------------------------------------------------------
// Carleman
//------------------------------------------------------------------------------

inline constexpr double default_carleman_threshold = 10.0;

enum class carleman_verdict
{
    divergence_certified,
    divergence_likely,
    inconclusive,
};

inline std::string_view to_string(carleman_verdict v)
{
    switch (v)
    {
    case carleman_verdict::divergence_certified: return "divergence_certified";
    case carleman_verdict::divergence_likely: return "divergence_likely";
    case carleman_verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct CarlemanReport
{
    var_id variable = 0;
    unsigned terms_used = 0;
    double partial_sum = 0.0;
    std::optional<std::string> closed_form_tag;
    carleman_verdict verdict = carleman_verdict::inconclusive;
};

namespace detail
{

/// Tag for sources whose Carleman series is known to diverge.
inline std::optional<std::string> carleman_tag(const MomentFunctional& l, var_id i)
{
    if (const auto* p = l.product_law())
    {
        const UnivariateLaw* law = nullptr;
        try
        {
            law = &p->factor(i);
        }
        catch (const error&)
        {
            return std::nullopt;
        }
        if (law->type == UnivariateLaw::kind::gaussian && law->parameter > 0.0) return "gaussian";
        return "compact-support";
    }
    if (l.atomic_source()) return "compact-support";
    return std::nullopt;
}

} // namespace detail

/// Partial sum of L(X_i^{2n})^{-1/(2n)} for n = 1..max_n.
inline CarlemanReport carleman(const MomentFunctional& l, var_id i, unsigned max_n,
                               double threshold = default_carleman_threshold)
{
    CarlemanReport rep;
    rep.variable = i;
    if (!l.degree_available(2 * max_n))
        throw error(errc::degree_exceeded, "Carleman sum to n = " + std::to_string(max_n) +
                                               " needs degree " + std::to_string(2 * max_n));
    for (unsigned n = 1; n <= max_n; ++n)
    {
        const MultiIndex m = MultiIndex::variable(i, 2 * n);
        const double v = l.moment(m);
        if (v == 0.0 && n == 1)
        {
            // X_i = 0 almost surely: compactly supported, trivially determinate
            rep.closed_form_tag = "degenerate";
            rep.verdict = carleman_verdict::divergence_certified;
            rep.terms_used = 0;
            return rep;
        }
        if (!(v > 0.0))
            throw error(errc::nonpositive_moment,
                        "L(" + m.to_string() + ") = " + detail::format_double(v));
        rep.partial_sum += std::exp(-l.log_moment(m) / (2.0 * n));
        rep.terms_used = n;
    }
    rep.closed_form_tag = detail::carleman_tag(l, i);
    if (rep.closed_form_tag)
        rep.verdict = carleman_verdict::divergence_certified;
    else if (rep.partial_sum >= threshold)
        rep.verdict = carleman_verdict::divergence_likely;
    else
        rep.verdict = carleman_verdict::inconclusive;
    return rep;
}

//------------------------------------------------------------------------------
// Archimedean
//------------------------------------------------------------------------------

enum class archimedean_verdict
{
    archimedean_syntactic,
    unknown,
};

inline std::string_view to_string(archimedean_verdict v)
{
    return v == archimedean_verdict::archimedean_syntactic ? "archimedean_syntactic" : "unknown";
}

struct ArchimedeanReport
{
    std::map<var_id, double> per_variable_bound;
    archimedean_verdict verdict = archimedean_verdict::unknown;
    std::map<var_id, bool> growth_check;
    /// max over tested n of L(X_i^{2n}) / N_i^{2n}
    std::map<var_id, double> max_growth_ratio;
    std::map<var_id, unsigned> first_violation;
    std::map<var_id, unsigned> orders_tested;
};

/// Bound N with |X_i| <= N on K, read off univariate generators
/// a X_i^2 + b (a < 0 < b) or a pair of affine bounds on X_i.
inline std::optional<double> syntactic_bound(const QuadraticModule& q, var_id i)
{
    std::optional<double> best, upper, lower;
    const MultiIndex x = MultiIndex::variable(i), x2 = MultiIndex::variable(i, 2), one;
    for (const auto& g : q.generators)
    {
        if (support(g) != VariableSet{i}) continue;
        const double a2 = g.coefficient(x2), a1 = g.coefficient(x), a0 = g.coefficient(one);
        if (g.terms().size() == 2 && a2 < 0.0 && a0 > 0.0)
        {
            const double n = std::sqrt(-a0 / a2);
            best = best ? std::min(*best, n) : n;
        }
        else if (g.degree() == 1 && a1 != 0.0)
        {
            const double t = -a0 / a1;
            if (a1 < 0.0)
                upper = upper ? std::min(*upper, t) : t;
            else
                lower = lower ? std::max(*lower, t) : t;
        }
    }
    if (upper && lower && *lower <= *upper)
    {
        const double n = std::max(std::abs(*upper), std::abs(*lower));
        best = best ? std::min(*best, n) : n;
    }
    return best;
}

inline ArchimedeanReport archimedean(const QuadraticModule& q, const MomentFunctional& l,
                                     const VariableSet& variables, unsigned max_n)
{
    ArchimedeanReport rep;
    bool all_bounded = !variables.empty();
    for (var_id i : variables)
    {
        const auto n_i = syntactic_bound(q, i);
        if (!n_i)
        {
            all_bounded = false;
            continue;
        }
        rep.per_variable_bound[i] = *n_i;
        bool ok = true;
        double worst = 0.0;
        unsigned tested = 0;
        for (unsigned n = 1; n <= max_n && l.degree_available(2 * n); ++n)
        {
            const MultiIndex m = MultiIndex::variable(i, 2 * n);
            const double v = l.moment(m);
            double ratio;
            if (v <= 0.0)
                ratio = 0.0;
            else if (*n_i == 0.0)
                ratio = std::numeric_limits<double>::infinity();
            else
                ratio = std::exp(l.log_moment(m) - 2.0 * n * std::log(*n_i));
            worst = std::max(worst, ratio);
            if (ratio > 1.0 + 1e-12 && ok)
            {
                ok = false;
                rep.first_violation[i] = n;
            }
            tested = n;
        }
        rep.growth_check[i] = ok;
        rep.max_growth_ratio[i] = worst;
        rep.orders_tested[i] = tested;
    }
    rep.verdict = all_bounded ? archimedean_verdict::archimedean_syntactic
                              : archimedean_verdict::unknown;
    return rep;
}

//------------------------------------------------------------------------------
// Partially Archimedean split
//------------------------------------------------------------------------------

struct SplitReport
{
    VariableSet archimedean_part; ///< bounded generator and growth check passed
    VariableSet carleman_part;    ///< Carleman series diverges (certified or likely)
    VariableSet uncovered;
    bool hypothesis_satisfied = false;
    ArchimedeanReport archimedean;
    std::map<var_id, CarlemanReport> carleman;
    std::map<var_id, std::string> carleman_errors;
};

inline SplitReport partial_split(const QuadraticModule& q, const MomentFunctional& l,
                                 const VariableSet& variables, unsigned max_n,
                                 double threshold = default_carleman_threshold)
{
    SplitReport rep;
    rep.archimedean = archimedean(q, l, variables, max_n);
    std::vector<var_id> ga, gc, un;
    for (var_id i : variables)
    {
        auto g = rep.archimedean.growth_check.find(i);
        if (g != rep.archimedean.growth_check.end() && g->second)
        {
            ga.push_back(i);
            continue;
        }
        unsigned n = max_n;
        if (auto md = l.max_degree()) n = std::min(n, *md / 2);
        try
        {
            const CarlemanReport c = carleman(l, i, n, threshold);
            rep.carleman.emplace(i, c);
            if (c.verdict != carleman_verdict::inconclusive)
            {
                gc.push_back(i);
                continue;
            }
        }
        catch (const error& e)
        {
            rep.carleman_errors.emplace(i, e.what());
        }
        un.push_back(i);
    }
    rep.archimedean_part = VariableSet(std::move(ga));
    rep.carleman_part = VariableSet(std::move(gc));
    rep.uncovered = VariableSet(std::move(un));
    rep.hypothesis_satisfied = rep.uncovered.empty();
    return rep;
}

//------------------------------------------------------------------------------
// Tightness
//------------------------------------------------------------------------------

struct TightnessCertificate
{
    double epsilon = 0.0;
    std::map<var_id, double> radius_schedule;
    std::map<VariableSet, double> per_index_mass;
    bool certified = false;
    std::optional<VariableSet> worst_index;
};

/// mu_F(prod_{i in F} [-R_i, R_i]) >= 1 - epsilon for every index F. The boxes
/// of nested indices are projections of one another, so they form a single
/// compact set of the limit.
inline TightnessCertificate tightness(const SealedFamily& fam, double epsilon,
                                      const std::map<var_id, double>& schedule)
{
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw error(errc::invalid_argument, "epsilon must lie in (0,1)");
    for (var_id i : fam.family().variables())
        if (!schedule.contains(i) || !(schedule.at(i) >= 0.0))
            throw error(errc::schedule_incomplete,
                        "no radius for variable x" + std::to_string(i));
    TightnessCertificate cert;
    cert.epsilon = epsilon;
    cert.radius_schedule = schedule;
    cert.certified = true;
    double worst = 2.0;
    for (const auto& f : fam.index_list())
    {
        const double m = box_mass(fam.at(f), schedule);
        cert.per_index_mass[f] = m;
        if (m < worst)
        {
            worst = m;
            cert.worst_index = f;
        }
        if (m < 1.0 - epsilon) cert.certified = false;
    }
    return cert;
}

struct ScheduleSuggestion
{
    std::map<var_id, double> radii;
    /// variables whose tail could not be pushed below the target
    VariableSet failed;
};

namespace detail
{

inline std::optional<double> radius_for_tail(const Marginal& mu, var_id i, double target)
{
    if (const auto* a = std::get_if<AtomicMeasure>(&mu))
    {
        std::vector<double> cand{0.0};
        for (const auto& atom : a->atoms()) cand.push_back(std::abs(atom.point.at(i)));
        std::sort(cand.begin(), cand.end());
        for (double r : cand)
            if (coordinate_tail(mu, i, r) <= target) return r;
        return std::nullopt;
    }
    const UnivariateLaw& law = std::get<ProductMarginal>(mu).factor(i);
    switch (law.type)
    {
    case UnivariateLaw::kind::dirac: return std::abs(law.parameter);
    case UnivariateLaw::kind::uniform: return law.parameter * (1.0 - std::min(1.0, target));
    case UnivariateLaw::kind::gaussian:
    {
        double lo = 0.0, hi = 1.0;
        int guard = 0;
        while (law.tail(hi) > target && guard++ < 200) hi *= 2.0;
        if (law.tail(hi) > target) return std::nullopt;
        for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            (law.tail(mid) > target ? lo : hi) = mid;
        }
        return hi;
    }
    }
    return std::nullopt;
}

} // namespace detail

/// Radius per variable with single-coordinate tail <= epsilon 2^{-rank},
/// rank = 1-based position in sorted id order. The union bound then gives
/// box mass >= 1 - epsilon on every index.
inline ScheduleSuggestion suggest_schedule(const SealedFamily& fam, double epsilon)
{
    ScheduleSuggestion out;
    std::vector<var_id> failed;
    unsigned rank = 0;
    for (var_id i : fam.family().variables())
    {
        ++rank;
        const double target = epsilon * std::ldexp(1.0, -static_cast<int>(rank));
        const VariableSet base = fam.covering_index(VariableSet{i});
        if (auto r = detail::radius_for_tail(fam.at(base), i, target))
            out.radii[i] = *r;
        else
            failed.push_back(i);
    }
    out.failed = VariableSet(std::move(failed));
    return out;
}

} // namespace momentlimit

#endif
