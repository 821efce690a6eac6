#ifndef MOMENTLIMIT_FUNCTIONAL_HPP
#define MOMENTLIMIT_FUNCTIONAL_HPP

///
/// \file functional.hpp
///
/// The normalized linear functional L on R[X_1, X_2, ...], given by its
/// values on monomials. Sources are either a finite table of moments or one
/// of a few closed forms (products of univariate laws, finite atomic
/// measures) whose moments are known exactly.
///

#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <unordered_map>
#include <variant>

#include "algebra.hpp"
#include "measure.hpp"

namespace momentlimit
{

/// One-dimensional closed-form law used as a factor of a product functional.
struct UnivariateLaw
{
    enum class kind
    {
        gaussian, ///< centered, parameter = variance
        uniform,  ///< uniform on [-r, r], parameter = r
        dirac,    ///< point mass, parameter = location
    };

    kind type = kind::dirac;
    double parameter = 0.0;

    static UnivariateLaw gaussian(double variance) { return {kind::gaussian, variance}; }
    static UnivariateLaw uniform(double radius) { return {kind::uniform, radius}; }
    static UnivariateLaw dirac(double location) { return {kind::dirac, location}; }

    double moment(unsigned k) const
    {
        switch (type)
        {
        case kind::gaussian:
        {
            if (k % 2) return 0.0;
            // sigma^k (k-1)!!
            double v = 1.0;
            for (unsigned j = k; j > 1; j -= 2) v *= static_cast<double>(j - 1) * parameter;
            return v;
        }
        case kind::uniform:
            return (k % 2) ? 0.0 : std::pow(parameter, k) / (k + 1.0);
        case kind::dirac:
            return k == 0 ? 1.0 : std::pow(parameter, k);
        }
        return 0.0;
    }

    /// P(X <= x).
    double cdf(double x) const
    {
        switch (type)
        {
        case kind::gaussian:
            if (parameter == 0.0) return x >= 0.0 ? 1.0 : 0.0;
            return 0.5 * std::erfc(-x / std::sqrt(2.0 * parameter));
        case kind::uniform:
            if (parameter == 0.0) return x >= 0.0 ? 1.0 : 0.0;
            return std::clamp((x + parameter) / (2.0 * parameter), 0.0, 1.0);
        case kind::dirac:
            return x >= parameter ? 1.0 : 0.0;
        }
        return 0.0;
    }

    /// P(X < x).
    double cdf_below(double x) const
    {
        if (type == kind::dirac) return x > parameter ? 1.0 : 0.0;
        if (parameter == 0.0) return x > 0.0 ? 1.0 : 0.0;
        return cdf(x);
    }

    /// P(|X| > r).
    double tail(double r) const
    {
        if (r < 0.0) return 1.0;
        switch (type)
        {
        case kind::gaussian:
            if (parameter == 0.0) return 0.0;
            return std::erfc(r / std::sqrt(2.0 * parameter));
        case kind::uniform:
            return parameter <= r ? 0.0 : 1.0 - r / parameter;
        case kind::dirac:
            return std::abs(parameter) > r ? 1.0 : 0.0;
        }
        return 0.0;
    }

    /// Whether every moment is finite and the support bounded.
    bool compact_support() const { return type != kind::gaussian || parameter == 0.0; }

    template <typename Rng>
    double sample(Rng& rng) const
    {
        switch (type)
        {
        case kind::gaussian:
            return std::normal_distribution<double>(0.0, std::sqrt(parameter))(rng);
        case kind::uniform:
            return std::uniform_real_distribution<double>(-parameter, parameter)(rng);
        case kind::dirac:
            return parameter;
        }
        return 0.0;
    }

    friend bool operator==(const UnivariateLaw&, const UnivariateLaw&) = default;
};

/// Product of independent univariate laws, one per variable id. Variables
/// without an explicit factor use `fallback` when set.
struct ProductLaw
{
    std::map<var_id, UnivariateLaw> factors;
    std::optional<UnivariateLaw> fallback;

    const UnivariateLaw& factor(var_id i) const
    {
        auto it = factors.find(i);
        if (it != factors.end()) return it->second;
        if (fallback) return *fallback;
        throw error(errc::unknown_variable,
                    "no law given for variable x" + std::to_string(i));
    }

    double moment(const MultiIndex& m) const
    {
        double v = 1.0;
        for (const auto& [i, e] : m.entries()) v *= factor(i).moment(e);
        return v;
    }

    friend bool operator==(const ProductLaw&, const ProductLaw&) = default;
};

/// Finite table of moments up to a degree bound. Entries may be stored as
/// logarithms for values beyond double range.
struct MomentTable
{
    unsigned max_degree = 0;
    std::unordered_map<MultiIndex, double, MultiIndexHash> values;
    std::unordered_map<MultiIndex, double, MultiIndexHash> log_values;
};

namespace detail
{

/// Memo of computed moments. Concurrent readers; an entry is inserted at most
/// once, and a racing duplicate computation yields the same value.
class MomentCache
{
public:
    std::optional<double> find(const MultiIndex& m) const
    {
        std::shared_lock lock(mutex_);
        auto it = map_.find(m);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    void insert(const MultiIndex& m, double v)
    {
        std::unique_lock lock(mutex_);
        map_.try_emplace(m, v);
    }

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<MultiIndex, double, MultiIndexHash> map_;
};

} // namespace detail

class MomentFunctional
{
public:
    using source_type = std::variant<MomentTable, ProductLaw, AtomicMeasure>;

    static MomentFunctional table(MomentTable t)
    {
        const MultiIndex one;
        auto it = t.values.find(one);
        if (it == t.values.end() || std::abs(it->second - 1.0) > 1e-12)
            throw error(errc::invalid_argument, "moment table must have L(1) = 1");
        for (const auto& [m, v] : t.values)
            if (m.degree() > t.max_degree)
                throw error(errc::degree_exceeded,
                            "table entry " + m.to_string() + " beyond max_degree");
        for (const auto& [m, v] : t.log_values)
            if (m.degree() > t.max_degree)
                throw error(errc::degree_exceeded,
                            "table entry " + m.to_string() + " beyond max_degree");
        return MomentFunctional(std::move(t));
    }

    static MomentFunctional product(ProductLaw law) { return MomentFunctional(std::move(law)); }

    static MomentFunctional gaussian_product(const std::map<var_id, double>& variances,
                                             std::optional<double> default_variance = {})
    {
        ProductLaw law;
        for (const auto& [i, v] : variances)
        {
            if (!(v >= 0.0)) throw error(errc::invalid_argument, "variance must be >= 0");
            law.factors.emplace(i, UnivariateLaw::gaussian(v));
        }
        if (default_variance) law.fallback = UnivariateLaw::gaussian(*default_variance);
        return product(std::move(law));
    }

    static MomentFunctional uniform_box_product(const std::map<var_id, double>& radii,
                                                std::optional<double> default_radius = {})
    {
        ProductLaw law;
        for (const auto& [i, r] : radii)
        {
            if (!(r >= 0.0)) throw error(errc::invalid_argument, "radius must be >= 0");
            law.factors.emplace(i, UnivariateLaw::uniform(r));
        }
        if (default_radius) law.fallback = UnivariateLaw::uniform(*default_radius);
        return product(std::move(law));
    }

    /// Point mass at x; coordinates not listed in x are taken to be zero.
    static MomentFunctional dirac_product(const Point& x)
    {
        ProductLaw law;
        for (const auto& [i, v] : x) law.factors.emplace(i, UnivariateLaw::dirac(v));
        law.fallback = UnivariateLaw::dirac(0.0);
        return product(std::move(law));
    }

    static MomentFunctional atomic(AtomicMeasure mu) { return MomentFunctional(std::move(mu)); }

    /// L(x^m).
    double moment(const MultiIndex& m) const
    {
        check_scope(m);
        if (auto hit = cache_->find(m)) return *hit;
        const double v = compute(m);
        cache_->insert(m, v);
        return v;
    }

    /// log L(x^m) for a moment known to be positive; exact for tables that
    /// store logarithms.
    double log_moment(const MultiIndex& m) const
    {
        check_scope(m);
        if (const auto* t = std::get_if<MomentTable>(source_.get()))
        {
            auto it = t->log_values.find(m);
            if (it != t->log_values.end()) return it->second;
        }
        return std::log(moment(m));
    }

    /// Largest degree of moment available, unbounded for closed forms.
    std::optional<unsigned> max_degree() const
    {
        if (const auto* t = std::get_if<MomentTable>(source_.get())) return t->max_degree;
        return std::nullopt;
    }

    bool degree_available(unsigned d) const
    {
        auto md = max_degree();
        return !md || d <= *md;
    }

    /// Restriction to R[X_i : i in F]. Restricting twice keeps the intersection.
    MomentFunctional restrict(const VariableSet& f) const
    {
        MomentFunctional out = *this;
        out.scope_ = scope_ ? scope_->intersect(f) : f;
        return out;
    }

    const std::optional<VariableSet>& scope() const noexcept { return scope_; }
    const source_type& source() const noexcept { return *source_; }

    const ProductLaw* product_law() const { return std::get_if<ProductLaw>(source_.get()); }
    const AtomicMeasure* atomic_source() const
    {
        return std::get_if<AtomicMeasure>(source_.get());
    }
    const MomentTable* table_source() const { return std::get_if<MomentTable>(source_.get()); }
    bool is_closed_form() const { return !table_source(); }

private:
    explicit MomentFunctional(source_type src)
        : source_(std::make_shared<const source_type>(std::move(src))),
          cache_(std::make_shared<detail::MomentCache>())
    {
    }

    void check_scope(const MultiIndex& m) const
    {
        if (scope_ && !m.supported_in(*scope_))
            throw error(errc::outside_subalgebra,
                        m.to_string() + " lies outside " + scope_->to_string());
    }

    double compute(const MultiIndex& m) const
    {
        return std::visit(
            [&](const auto& src) -> double {
                using T = std::decay_t<decltype(src)>;
                if constexpr (std::is_same_v<T, MomentTable>)
                {
                    if (m.degree() > src.max_degree)
                        throw error(errc::degree_exceeded,
                                    m.to_string() + " exceeds table degree " +
                                        std::to_string(src.max_degree));
                    if (auto it = src.values.find(m); it != src.values.end())
                        return it->second;
                    if (auto it = src.log_values.find(m); it != src.log_values.end())
                        return std::exp(it->second);
                    throw error(errc::missing_moment, "table has no entry for " + m.to_string());
                }
                else if constexpr (std::is_same_v<T, ProductLaw>)
                    return src.moment(m);
                else
                    return src.moment(m);
            },
            *source_);
    }

    std::shared_ptr<const source_type> source_;
    std::optional<VariableSet> scope_;
    std::shared_ptr<detail::MomentCache> cache_;
};

/// L(p) by linearity.
inline double riesz(const MomentFunctional& l, const Polynomial& p)
{
    double s = 0.0;
    for (const auto& [m, c] : p.terms()) s += c * l.moment(m);
    return s;
}

} // namespace momentlimit

#endif
