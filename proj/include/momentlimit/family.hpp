#ifndef MOMENTLIMIT_FAMILY_HPP
#define MOMENTLIMIT_FAMILY_HPP

///
/// \file family.hpp
///
/// A finite directed family of variable sets F together with one probability
/// measure on R^F per index. Marginals are either atomic (extracted from
/// moment data) or closed-form products of univariate laws.
///

#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "functional.hpp"
#include "measure.hpp"

namespace momentlimit
{

/// Closed-form marginal: the product law restricted to a finite variable set.
class ProductMarginal
{
public:
    ProductMarginal() = default;
    ProductMarginal(VariableSet variables, const ProductLaw& law) : variables_(std::move(variables))
    {
        for (var_id i : variables_) law_.factors.emplace(i, law.factor(i));
    }

    const VariableSet& variables() const noexcept { return variables_; }
    const ProductLaw& law() const noexcept { return law_; }
    const UnivariateLaw& factor(var_id i) const { return law_.factor(i); }

    double moment(const MultiIndex& m) const
    {
        if (!m.supported_in(variables_))
            throw error(errc::outside_subalgebra, m.to_string() + " not supported in " +
                                                      variables_.to_string());
        return law_.moment(m);
    }

private:
    VariableSet variables_;
    ProductLaw law_;
};

using Marginal = std::variant<AtomicMeasure, ProductMarginal>;

inline const VariableSet& variables_of(const Marginal& mu)
{
    return std::visit([](const auto& m) -> const VariableSet& { return m.variables(); }, mu);
}

inline double moment_of(const Marginal& mu, const MultiIndex& m)
{
    return std::visit([&](const auto& x) { return x.moment(m); }, mu);
}

/// Image of an atomic measure under the coordinate projection R^G -> R^F.
/// Projections landing within merge_tol of each other are merged.
inline AtomicMeasure pushforward(const AtomicMeasure& mu, const VariableSet& f,
                                 double merge_tol = default_merge_tolerance)
{
    if (!f.is_subset_of(mu.variables()))
        throw error(errc::not_a_subset,
                    f.to_string() + " is not a subset of " + mu.variables().to_string());
    std::vector<Atom> atoms;
    atoms.reserve(mu.size());
    for (const auto& a : mu.atoms())
    {
        Atom b;
        b.weight = a.weight;
        for (var_id i : f) b.point.emplace(i, a.point.at(i));
        atoms.push_back(std::move(b));
    }
    return AtomicMeasure(f, std::move(atoms), merge_tol);
}

inline Marginal pushforward(const Marginal& mu, const VariableSet& f,
                            double merge_tol = default_merge_tolerance)
{
    if (const auto* a = std::get_if<AtomicMeasure>(&mu)) return pushforward(*a, f, merge_tol);
    const auto& p = std::get<ProductMarginal>(mu);
    if (!f.is_subset_of(p.variables()))
        throw error(errc::not_a_subset,
                    f.to_string() + " is not a subset of " + p.variables().to_string());
    return ProductMarginal(f, p.law());
}

class ProjectiveFamily
{
public:
    /// Adds (or replaces) the marginal on its own variable set. A certified
    /// degree bounds the moments later compared for exactness.
    void add(Marginal mu, std::optional<unsigned> certified_degree = std::nullopt)
    {
        VariableSet f = variables_of(mu);
        if (certified_degree)
            certified_[f] = *certified_degree;
        else
            certified_.erase(f);
        measures_.insert_or_assign(std::move(f), std::move(mu));
    }

    bool contains(const VariableSet& f) const { return measures_.contains(f); }

    const Marginal& at(const VariableSet& f) const
    {
        auto it = measures_.find(f);
        if (it == measures_.end())
            throw error(errc::missing_subset, "family has no marginal on " + f.to_string());
        return it->second;
    }

    std::optional<unsigned> certified_degree(const VariableSet& f) const
    {
        auto it = certified_.find(f);
        if (it == certified_.end()) return std::nullopt;
        return it->second;
    }

    /// Indices ordered smallest first.
    std::vector<VariableSet> index_list() const
    {
        std::vector<VariableSet> out;
        for (const auto& [f, mu] : measures_) out.push_back(f);
        std::sort(out.begin(), out.end(), smaller_index);
        return out;
    }

    std::size_t size() const noexcept { return measures_.size(); }

    /// All variables appearing in some index.
    VariableSet variables() const
    {
        VariableSet out;
        for (const auto& [f, mu] : measures_) out = out.union_with(f);
        return out;
    }

    /// Pairs F ⊊ F' with no index strictly between them.
    std::vector<std::pair<VariableSet, VariableSet>> covering_pairs() const
    {
        const auto idx = index_list();
        std::vector<std::pair<VariableSet, VariableSet>> out;
        for (const auto& a : idx)
        {
            for (const auto& b : idx)
            {
                if (a == b || !a.is_subset_of(b)) continue;
                bool between = false;
                for (const auto& c : idx)
                {
                    if (c != a && c != b && a.is_subset_of(c) && c.is_subset_of(b))
                    {
                        between = true;
                        break;
                    }
                }
                if (!between) out.emplace_back(a, b);
            }
        }
        return out;
    }

    const std::map<VariableSet, Marginal>& measures() const noexcept { return measures_; }

private:
    std::map<VariableSet, Marginal> measures_;
    std::map<VariableSet, unsigned> certified_;
};

} // namespace momentlimit

#endif
