#ifndef MOMENTLIMIT_PROJECTIVE_HPP
#define MOMENTLIMIT_PROJECTIVE_HPP

///
/// \file projective.hpp
///
/// Sealed (pushforward-compatible) families, cylinder sets over them and the
/// induced set function C = pi_F^{-1}(E) |-> mu_F(E). Sealing is the only way
/// to obtain a SealedFamily, so evaluation and sampling only ever see families
/// whose covering pairs passed the exactness check.
///

#include <random>
#include <sstream>

#include "extraction.hpp"

namespace momentlimit
{

//------------------------------------------------------------------------------
// Predicates and cylinder sets
//------------------------------------------------------------------------------

enum class relation
{
    ge,
    gt,
    le,
    lt,
};

inline std::string_view to_string(relation r)
{
    switch (r)
    {
    case relation::ge: return ">=";
    case relation::gt: return ">";
    case relation::le: return "<=";
    case relation::lt: return "<";
    }
    return "?";
}

/// Default slack when evaluating g ⋈ c at an atom: closed inequalities accept
/// points this far outside, strict ones reject points this close to the edge.
inline constexpr double default_boundary_tolerance = 1e-9;

/// Finite boolean combination of polynomial inequalities g ⋈ c.
class Predicate
{
public:
    enum class op
    {
        always,
        inequality,
        all_of,
        any_of,
        negation,
    };

    static Predicate always() { return Predicate(op::always); }

    static Predicate inequality(Polynomial g, relation rel, double c)
    {
        Predicate p(op::inequality);
        p.g_ = std::move(g);
        p.rel_ = rel;
        p.c_ = c;
        return p;
    }

    static Predicate all_of(std::vector<Predicate> parts)
    {
        Predicate p(op::all_of);
        p.children_ = std::move(parts);
        return p;
    }

    static Predicate any_of(std::vector<Predicate> parts)
    {
        Predicate p(op::any_of);
        p.children_ = std::move(parts);
        return p;
    }

    static Predicate negation(Predicate inner)
    {
        Predicate p(op::negation);
        p.children_.push_back(std::move(inner));
        return p;
    }

    op kind() const noexcept { return op_; }
    const Polynomial& polynomial() const noexcept { return g_; }
    relation rel() const noexcept { return rel_; }
    double threshold() const noexcept { return c_; }
    const std::vector<Predicate>& children() const noexcept { return children_; }

    VariableSet support() const
    {
        VariableSet s = op_ == op::inequality ? momentlimit::support(g_) : VariableSet{};
        for (const auto& c : children_) s = s.union_with(c.support());
        return s;
    }

    bool holds(const Point& x, double tol = default_boundary_tolerance) const
    {
        switch (op_)
        {
        case op::always: return true;
        case op::inequality:
        {
            const double d = evaluate(g_, x) - c_;
            switch (rel_)
            {
            case relation::ge: return d >= -tol;
            case relation::gt: return d > tol;
            case relation::le: return d <= tol;
            case relation::lt: return d < -tol;
            }
            return false;
        }
        case op::all_of:
            return std::all_of(children_.begin(), children_.end(),
                               [&](const Predicate& p) { return p.holds(x, tol); });
        case op::any_of:
            return std::any_of(children_.begin(), children_.end(),
                               [&](const Predicate& p) { return p.holds(x, tol); });
        case op::negation: return !children_.front().holds(x, tol);
        }
        return false;
    }

    std::string to_string() const
    {
        switch (op_)
        {
        case op::always: return "true";
        case op::inequality:
            return "(" + g_.to_string() + " " + std::string(momentlimit::to_string(rel_)) + " " +
                   detail::format_double(c_) + ")";
        case op::all_of:
        case op::any_of:
        {
            std::string s = op_ == op::all_of ? "all(" : "any(";
            for (std::size_t k = 0; k < children_.size(); ++k)
                s += (k ? ", " : "") + children_[k].to_string();
            return s + ")";
        }
        case op::negation: return "not " + children_.front().to_string();
        }
        return "?";
    }

private:
    explicit Predicate(op o) : op_(o) {}

    op op_;
    Polynomial g_;
    relation rel_ = relation::ge;
    double c_ = 0.0;
    std::vector<Predicate> children_;
};

/// pi_F^{-1}(E) with E described by a predicate on the coordinates in F.
struct CylinderSet
{
    VariableSet base_variables;
    Predicate predicate = Predicate::always();

    CylinderSet(VariableSet base, Predicate pred)
        : base_variables(std::move(base)), predicate(std::move(pred))
    {
        if (!predicate.support().is_subset_of(base_variables))
            throw error(errc::not_a_subset, "predicate uses variables outside " +
                                                base_variables.to_string());
    }
};

struct CylinderMeasureValue
{
    double value = 0.0;
    VariableSet base_used;
};

//------------------------------------------------------------------------------
// Mass of a predicate under one marginal
//------------------------------------------------------------------------------

namespace detail
{

struct Interval
{
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_closed = false;
    bool hi_closed = false;

    void raise_lo(double v, bool closed)
    {
        if (v > lo || (v == lo && !closed))
        {
            lo = v;
            lo_closed = closed;
        }
    }
    void lower_hi(double v, bool closed)
    {
        if (v < hi || (v == hi && !closed))
        {
            hi = v;
            hi_closed = closed;
        }
    }

    double mass(const UnivariateLaw& law) const
    {
        if (lo > hi) return 0.0;
        const double upper = hi_closed ? law.cdf(hi) : law.cdf_below(hi);
        const double lower = lo_closed ? law.cdf_below(lo) : law.cdf(lo);
        return std::max(0.0, upper - lower);
    }
};

/// Collects a conjunction of univariate affine inequalities into intervals.
inline void collect_intervals(const Predicate& p, std::map<var_id, Interval>& box)
{
    switch (p.kind())
    {
    case Predicate::op::always: return;
    case Predicate::op::all_of:
        for (const auto& c : p.children()) collect_intervals(c, box);
        return;
    case Predicate::op::inequality:
    {
        const Polynomial& g = p.polynomial();
        const VariableSet s = support(g);
        if (s.size() != 1 || g.degree() != 1)
            throw error(errc::unsupported_predicate,
                        "closed-form marginals evaluate only axis-aligned boxes, got " +
                            p.to_string());
        const var_id i = *s.begin();
        const double a = g.coefficient(MultiIndex::variable(i));
        const double b = g.coefficient(MultiIndex{});
        // a x + b ⋈ c  <=>  x ⋈' (c - b) / a
        const double t = (p.threshold() - b) / a;
        relation rel = p.rel();
        if (a < 0.0)
        {
            switch (rel)
            {
            case relation::ge: rel = relation::le; break;
            case relation::gt: rel = relation::lt; break;
            case relation::le: rel = relation::ge; break;
            case relation::lt: rel = relation::gt; break;
            }
        }
        Interval& iv = box[i];
        switch (rel)
        {
        case relation::ge: iv.raise_lo(t, true); break;
        case relation::gt: iv.raise_lo(t, false); break;
        case relation::le: iv.lower_hi(t, true); break;
        case relation::lt: iv.lower_hi(t, false); break;
        }
        return;
    }
    default:
        throw error(errc::unsupported_predicate,
                    "closed-form marginals evaluate only conjunctions, got " + p.to_string());
    }
}

} // namespace detail

/// mu(E) for a single marginal and a predicate supported in its variables.
inline double predicate_mass(const Marginal& mu, const Predicate& pred,
                             double tol = default_boundary_tolerance)
{
    if (const auto* a = std::get_if<AtomicMeasure>(&mu))
    {
        double s = 0.0;
        for (const auto& atom : a->atoms())
            if (pred.holds(atom.point, tol)) s += atom.weight;
        return s;
    }
    const auto& p = std::get<ProductMarginal>(mu);
    std::map<var_id, detail::Interval> box;
    detail::collect_intervals(pred, box);
    double mass = 1.0;
    for (const auto& [i, iv] : box) mass *= iv.mass(p.factor(i));
    return mass;
}

/// Mass of the closed box prod_{i in F} [-R_i, R_i].
inline double box_mass(const Marginal& mu, const std::map<var_id, double>& radii,
                       double tol = default_boundary_tolerance)
{
    const VariableSet& f = variables_of(mu);
    if (const auto* a = std::get_if<AtomicMeasure>(&mu))
    {
        double s = 0.0;
        for (const auto& atom : a->atoms())
        {
            bool inside = true;
            for (var_id i : f) inside = inside && std::abs(atom.point.at(i)) <= radii.at(i) + tol;
            if (inside) s += atom.weight;
        }
        return s;
    }
    const auto& p = std::get<ProductMarginal>(mu);
    double mass = 1.0;
    for (var_id i : f) mass *= 1.0 - p.factor(i).tail(radii.at(i));
    return mass;
}

/// Mass of |x_i| > r.
inline double coordinate_tail(const Marginal& mu, var_id i, double r,
                              double tol = default_boundary_tolerance)
{
    if (const auto* a = std::get_if<AtomicMeasure>(&mu))
    {
        double s = 0.0;
        for (const auto& atom : a->atoms())
            if (std::abs(atom.point.at(i)) > r + tol) s += atom.weight;
        return s;
    }
    return std::get<ProductMarginal>(mu).factor(i).tail(r);
}

//------------------------------------------------------------------------------
// Sealing
//------------------------------------------------------------------------------

class SealedFamily
{
public:
    const ProjectiveFamily& family() const noexcept { return family_; }
    const ExactnessReport& exactness() const noexcept { return report_; }
    std::vector<VariableSet> index_list() const { return family_.index_list(); }
    const Marginal& at(const VariableSet& f) const { return family_.at(f); }

    /// Smallest index containing f.
    VariableSet covering_index(const VariableSet& f) const
    {
        for (const auto& idx : family_.index_list())
            if (f.is_subset_of(idx)) return idx;
        throw error(errc::base_not_covered, "no index contains " + f.to_string());
    }

private:
    friend SealedFamily seal(ProjectiveFamily, double, unsigned);
    SealedFamily(ProjectiveFamily fam, ExactnessReport rep)
        : family_(std::move(fam)), report_(std::move(rep))
    {
    }

    ProjectiveFamily family_;
    ExactnessReport report_;
};

/// Checks exactness on every covering pair and freezes the family.
inline SealedFamily seal(ProjectiveFamily family, double tol,
                         unsigned max_degree = default_exactness_degree)
{
    const auto idx = family.index_list();
    if (idx.empty()) throw error(errc::invalid_argument, "cannot seal an empty family");
    if (!is_union_closed(idx))
        throw error(errc::not_directed, "index list is not closed under union");
    ExactnessReport rep = check_exactness(family, family.covering_pairs(), tol, max_degree);
    if (!rep.exact)
    {
        std::ostringstream os;
        os << "worst pair (" << rep.worst_pair->first.to_string() << ","
           << rep.worst_pair->second.to_string() << ") has moment discrepancy "
           << rep.max_discrepancy << " > " << tol;
        throw error(errc::exactness_violation, os.str());
    }
    return SealedFamily(std::move(family), std::move(rep));
}

//------------------------------------------------------------------------------
// Evaluation, audit, sampling
//------------------------------------------------------------------------------

/// mu_base(E) for an explicit base index containing the cylinder's base.
inline CylinderMeasureValue measure_on(const SealedFamily& fam, const CylinderSet& c,
                                       const VariableSet& base,
                                       double tol = default_boundary_tolerance)
{
    if (!c.base_variables.is_subset_of(base) || !fam.family().contains(base))
        throw error(errc::base_not_covered, base.to_string() + " cannot carry " +
                                                c.base_variables.to_string());
    return {predicate_mass(fam.at(base), c.predicate, tol), base};
}

/// mu_F(E) on the smallest index F containing the cylinder's base.
inline CylinderMeasureValue measure_of(const SealedFamily& fam, const CylinderSet& c,
                                       double tol = default_boundary_tolerance)
{
    return measure_on(fam, c, fam.covering_index(c.base_variables), tol);
}

struct AuditReport
{
    std::size_t trials = 0;
    double max_discrepancy = 0.0;
    std::optional<std::pair<VariableSet, VariableSet>> worst_pair;
    std::string worst_predicate;
};

namespace detail
{

inline Predicate random_predicate(const VariableSet& f, bool axis_aligned, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> coef(-2, 2);
    std::uniform_int_distribution<int> thresh(-2, 2);
    std::uniform_int_distribution<int> rel(0, 3);
    std::uniform_int_distribution<int> parts(1, 3);
    std::uniform_int_distribution<std::size_t> pick(0, f.size() - 1);
    const relation rels[] = {relation::ge, relation::gt, relation::le, relation::lt};

    std::vector<Predicate> halves;
    const int k = parts(rng);
    for (int h = 0; h < k; ++h)
    {
        Polynomial g;
        if (axis_aligned)
        {
            g = Polynomial::variable(f.ids()[pick(rng)]) * (rng() % 2 ? 1.0 : -1.0);
        }
        else
        {
            while (g.is_zero())
                for (var_id i : f) g += Polynomial::variable(i) * static_cast<double>(coef(rng));
        }
        halves.push_back(Predicate::inequality(std::move(g), rels[rel(rng)], thresh(rng)));
    }
    if (axis_aligned || rng() % 2) return Predicate::all_of(std::move(halves));
    return Predicate::any_of(std::move(halves));
}

} // namespace detail

/// Draws random events expressible on two comparable indices F ⊊ F' and
/// reports the largest |mu_F(E) - mu_F'(pi^{-1}(E))|. A statistical surrogate
/// for well-definedness of the cylinder set function.
inline AuditReport well_definedness_audit(const SealedFamily& fam, std::size_t trials,
                                          std::uint64_t seed,
                                          double tol = default_boundary_tolerance)
{
    const auto idx = fam.index_list();
    if (idx.size() < 2) throw error(errc::invalid_argument, "audit needs at least two indices");
    std::vector<std::pair<VariableSet, VariableSet>> pairs;
    for (const auto& a : idx)
        for (const auto& b : idx)
            if (a != b && a.is_subset_of(b) && !a.empty()) pairs.emplace_back(a, b);

    AuditReport rep;
    rep.trials = trials;
    if (pairs.empty() || trials == 0) return rep;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> which(0, pairs.size() - 1);
    for (std::size_t t = 0; t < trials; ++t)
    {
        const auto& [small, big] = pairs[which(rng)];
        const bool axis = std::holds_alternative<ProductMarginal>(fam.at(small)) ||
                          std::holds_alternative<ProductMarginal>(fam.at(big));
        const CylinderSet c(small, detail::random_predicate(small, axis, rng));
        const double d = std::abs(measure_on(fam, c, small, tol).value -
                                  measure_on(fam, c, big, tol).value);
        if (!rep.worst_pair || d > rep.max_discrepancy)
        {
            rep.max_discrepancy = d;
            rep.worst_pair = std::make_pair(small, big);
            rep.worst_predicate = c.predicate.to_string();
        }
    }
    return rep;
}

/// i.i.d. draws from mu_F for an index F of the family; deterministic in seed.
inline std::vector<Point> sample(const SealedFamily& fam, const VariableSet& target,
                                 std::size_t count, std::uint64_t seed)
{
    if (!fam.family().contains(target))
        throw error(errc::base_not_covered, target.to_string() + " is not an index");
    const Marginal& mu = fam.at(target);
    std::mt19937_64 rng(seed);
    std::vector<Point> out;
    out.reserve(count);
    if (const auto* a = std::get_if<AtomicMeasure>(&mu))
    {
        std::vector<double> w;
        for (const auto& atom : a->atoms()) w.push_back(atom.weight);
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        for (std::size_t k = 0; k < count; ++k) out.push_back(a->atoms()[pick(rng)].point);
        return out;
    }
    const auto& p = std::get<ProductMarginal>(mu);
    for (std::size_t k = 0; k < count; ++k)
    {
        Point x;
        for (var_id i : target) x.emplace(i, p.factor(i).sample(rng));
        out.push_back(std::move(x));
    }
    return out;
}

} // namespace momentlimit

#endif
