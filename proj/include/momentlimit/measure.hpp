#ifndef MOMENTLIMIT_MEASURE_HPP
#define MOMENTLIMIT_MEASURE_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "algebra.hpp"

namespace momentlimit
{

struct Atom
{
    Point point;
    double weight = 0.0;
};

/// Default spatial tolerance below which two atoms are treated as one point.
inline constexpr double default_merge_tolerance = 1e-7;

/// Finitely many weighted points of R^F with total mass one.
class AtomicMeasure
{
public:
    AtomicMeasure() = default;

    /// Validates coordinates and mass and merges atoms closer than
    /// merge_tol in the max-norm (weights add, position of the heavier wins).
    AtomicMeasure(VariableSet variables, std::vector<Atom> atoms,
                  double merge_tol = default_merge_tolerance)
        : variables_(std::move(variables))
    {
        double total = 0.0;
        for (auto& a : atoms)
        {
            if (!(a.weight > 0.0) || !std::isfinite(a.weight))
                throw error(errc::invalid_argument, "atom weights must be positive");
            if (a.point.size() != variables_.size())
                throw error(errc::invalid_argument,
                            "atom coordinates do not match " + variables_.to_string());
            for (var_id i : variables_)
                if (!a.point.contains(i))
                    throw error(errc::missing_coordinate,
                                "atom lacks coordinate x" + std::to_string(i));
            total += a.weight;
            add_merged(std::move(a), merge_tol);
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw error(errc::invalid_argument,
                        "atom weights sum to " + detail::format_double(total) +
                            ", expected 1");
    }

    /// Single point mass.
    static AtomicMeasure dirac(const Point& x)
    {
        std::vector<var_id> ids;
        for (const auto& [i, v] : x) ids.push_back(i);
        return AtomicMeasure(VariableSet(std::move(ids)), {Atom{x, 1.0}});
    }

    const VariableSet& variables() const noexcept { return variables_; }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }

    /// Integral of x^m; m must be supported in variables().
    double moment(const MultiIndex& m) const
    {
        if (!m.supported_in(variables_))
            throw error(errc::outside_subalgebra, "monomial " + m.to_string() +
                                                      " not supported in " +
                                                      variables_.to_string());
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight * m.evaluate(a.point);
        return s;
    }

    double integrate(const Polynomial& p) const
    {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight * evaluate(p, a.point);
        return s;
    }

private:
    void add_merged(Atom a, double tol)
    {
        for (auto& b : atoms_)
        {
            double dist = 0.0;
            for (const auto& [i, v] : a.point) dist = std::max(dist, std::abs(v - b.point.at(i)));
            if (dist <= tol)
            {
                if (a.weight > b.weight) b.point = std::move(a.point);
                b.weight += a.weight;
                return;
            }
        }
        atoms_.push_back(std::move(a));
    }

    VariableSet variables_;
    std::vector<Atom> atoms_;
};

} // namespace momentlimit

#endif
