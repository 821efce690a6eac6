#ifndef MOMENTLIMIT_ALGEBRA_HPP
#define MOMENTLIMIT_ALGEBRA_HPP

///
/// \file algebra.hpp
///
/// Polynomials in countably many variables X_1, X_2, ... stored sparsely,
/// together with the finite coordinate subalgebras R[X_i : i in F] they live
/// in and the generator lists of quadratic modules.
///
/// Monomials are kept in graded-lexicographic order everywhere: lower total
/// degree first, ties broken by the exponent of the smallest variable id
/// (larger exponent first). On F = {1,2} this gives 1, X1, X2, X1^2, X1 X2,
/// X2^2. Matrix row/column indices downstream rely on this order.
///

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace momentlimit
{

using var_id = std::uint32_t;

/// A point of R^F, i.e. a character of a coordinate subalgebra.
using Point = std::map<var_id, double>;

namespace detail
{
inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}
} // namespace detail

//------------------------------------------------------------------------------
// VariableSet
//------------------------------------------------------------------------------

class VariableSet
{
public:
    VariableSet() = default;
    VariableSet(std::initializer_list<var_id> ids) : ids_(ids) { normalize(); }
    explicit VariableSet(std::vector<var_id> ids) : ids_(std::move(ids)) { normalize(); }

    const std::vector<var_id>& ids() const noexcept { return ids_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    auto begin() const noexcept { return ids_.begin(); }
    auto end() const noexcept { return ids_.end(); }

    bool contains(var_id i) const
    {
        return std::binary_search(ids_.begin(), ids_.end(), i);
    }

    bool is_subset_of(const VariableSet& other) const
    {
        return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(),
                             ids_.end());
    }

    VariableSet union_with(const VariableSet& other) const
    {
        std::vector<var_id> out;
        std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(),
                       other.ids_.end(), std::back_inserter(out));
        return VariableSet(std::move(out));
    }

    VariableSet intersect(const VariableSet& other) const
    {
        std::vector<var_id> out;
        std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(),
                              other.ids_.end(), std::back_inserter(out));
        return VariableSet(std::move(out));
    }

    /// "{1,2,7}"
    std::string to_string() const
    {
        std::string s = "{";
        for (std::size_t k = 0; k < ids_.size(); ++k)
        {
            if (k) s += ",";
            s += std::to_string(ids_[k]);
        }
        return s + "}";
    }

    friend bool operator==(const VariableSet&, const VariableSet&) = default;
    friend auto operator<=>(const VariableSet&, const VariableSet&) = default;

private:
    void normalize()
    {
        std::sort(ids_.begin(), ids_.end());
        ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    }

    std::vector<var_id> ids_;
};

/// Smallest-first order used when several indices could serve as a base:
/// fewer variables first, then lexicographic.
inline bool smaller_index(const VariableSet& a, const VariableSet& b)
{
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

/// Closes a list of variable sets under pairwise union. Output sorted with
/// smaller_index and free of duplicates.
inline std::vector<VariableSet> close_under_union(std::vector<VariableSet> sets)
{
    std::sort(sets.begin(), sets.end(), smaller_index);
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    bool grew = true;
    while (grew)
    {
        grew = false;
        const std::size_t n = sets.size();
        for (std::size_t a = 0; a < n; ++a)
        {
            for (std::size_t b = a + 1; b < n; ++b)
            {
                auto u = sets[a].union_with(sets[b]);
                if (std::find(sets.begin(), sets.end(), u) == sets.end())
                {
                    sets.push_back(std::move(u));
                    grew = true;
                }
            }
        }
    }
    std::sort(sets.begin(), sets.end(), smaller_index);
    return sets;
}

inline bool is_union_closed(const std::vector<VariableSet>& sets)
{
    for (std::size_t a = 0; a < sets.size(); ++a)
        for (std::size_t b = a + 1; b < sets.size(); ++b)
            if (std::find(sets.begin(), sets.end(), sets[a].union_with(sets[b])) ==
                sets.end())
                return false;
    return true;
}

//------------------------------------------------------------------------------
// MultiIndex
//------------------------------------------------------------------------------

/// Sparse exponent vector. Entries sorted by variable id, no zero exponents.
class MultiIndex
{
public:
    using entry = std::pair<var_id, unsigned>;

    MultiIndex() = default;
    MultiIndex(std::initializer_list<entry> entries)
        : entries_(entries.begin(), entries.end())
    {
        normalize();
    }
    explicit MultiIndex(std::vector<entry> entries) : entries_(std::move(entries))
    {
        normalize();
    }

    static MultiIndex variable(var_id i, unsigned exponent = 1)
    {
        return exponent == 0 ? MultiIndex{} : MultiIndex{{i, exponent}};
    }

    const std::vector<entry>& entries() const noexcept { return entries_; }
    bool is_constant() const noexcept { return entries_.empty(); }

    unsigned degree() const noexcept
    {
        unsigned d = 0;
        for (const auto& e : entries_) d += e.second;
        return d;
    }

    unsigned exponent(var_id i) const
    {
        auto it = std::lower_bound(
            entries_.begin(), entries_.end(), i,
            [](const entry& e, var_id v) { return e.first < v; });
        return (it != entries_.end() && it->first == i) ? it->second : 0U;
    }

    VariableSet support() const
    {
        std::vector<var_id> ids;
        ids.reserve(entries_.size());
        for (const auto& e : entries_) ids.push_back(e.first);
        return VariableSet(std::move(ids));
    }

    bool supported_in(const VariableSet& f) const
    {
        for (const auto& e : entries_)
            if (!f.contains(e.first)) return false;
        return true;
    }

    friend MultiIndex operator*(const MultiIndex& a, const MultiIndex& b)
    {
        std::vector<entry> out;
        out.reserve(a.entries_.size() + b.entries_.size());
        auto i = a.entries_.begin();
        auto j = b.entries_.begin();
        while (i != a.entries_.end() || j != b.entries_.end())
        {
            if (j == b.entries_.end() || (i != a.entries_.end() && i->first < j->first))
                out.push_back(*i++);
            else if (i == a.entries_.end() || j->first < i->first)
                out.push_back(*j++);
            else
            {
                out.emplace_back(i->first, i->second + j->second);
                ++i;
                ++j;
            }
        }
        MultiIndex m;
        m.entries_ = std::move(out);
        return m;
    }

    /// Evaluates x^m at a point; throws missing_coordinate if a variable is absent.
    double evaluate(const Point& x) const
    {
        double v = 1.0;
        for (const auto& [id, e] : entries_)
        {
            auto it = x.find(id);
            if (it == x.end())
                throw error(errc::missing_coordinate,
                            "variable x" + std::to_string(id) + " absent from point");
            for (unsigned k = 0; k < e; ++k) v *= it->second;
        }
        return v;
    }

    /// "1", "x1", "x1^2*x7"
    std::string to_string() const
    {
        if (entries_.empty()) return "1";
        std::string s;
        for (std::size_t k = 0; k < entries_.size(); ++k)
        {
            if (k) s += "*";
            s += "x" + std::to_string(entries_[k].first);
            if (entries_[k].second != 1) s += "^" + std::to_string(entries_[k].second);
        }
        return s;
    }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
    void normalize()
    {
        std::sort(entries_.begin(), entries_.end());
        std::vector<entry> merged;
        for (const auto& e : entries_)
        {
            if (!merged.empty() && merged.back().first == e.first)
                merged.back().second += e.second;
            else
                merged.push_back(e);
        }
        std::erase_if(merged, [](const entry& e) { return e.second == 0; });
        entries_ = std::move(merged);
    }

    std::vector<entry> entries_;
};

/// Strict graded-lexicographic "comes before" relation.
struct GradedLexLess
{
    bool operator()(const MultiIndex& a, const MultiIndex& b) const
    {
        const unsigned da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        const auto& ea = a.entries();
        const auto& eb = b.entries();
        std::size_t i = 0, j = 0;
        while (i < ea.size() && j < eb.size())
        {
            if (ea[i] == eb[j])
            {
                ++i;
                ++j;
                continue;
            }
            if (ea[i].first != eb[j].first)
                // the one holding the smaller variable id has the larger exponent
                return ea[i].first < eb[j].first;
            return ea[i].second > eb[j].second;
        }
        // equal degree and one is a prefix of the other: both exhausted
        return false;
    }
};

struct MultiIndexHash
{
    std::size_t operator()(const MultiIndex& m) const noexcept
    {
        std::size_t h = 0x9e3779b97f4a7c15ULL;
        for (const auto& [id, e] : m.entries())
        {
            h ^= std::hash<std::uint64_t>{}((std::uint64_t(id) << 32) | e) +
                 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

/// All multi-indices supported in F with total degree <= n, graded-lex order.
/// Length is C(|F|+n, n).
inline std::vector<MultiIndex> monomials_up_to(const VariableSet& f, unsigned n)
{
    std::vector<MultiIndex> out;
    const auto& ids = f.ids();
    std::vector<unsigned> exps(ids.size(), 0);

    // Compositions of d over ids in descending-lex order of the exponent vector.
    std::function<void(std::size_t, unsigned)> fill = [&](std::size_t pos, unsigned left) {
        if (pos + 1 == ids.size())
        {
            exps[pos] = left;
            std::vector<MultiIndex::entry> e;
            for (std::size_t k = 0; k < ids.size(); ++k)
                if (exps[k]) e.emplace_back(ids[k], exps[k]);
            out.emplace_back(std::move(e));
            return;
        }
        for (unsigned a = left + 1; a-- > 0;)
        {
            exps[pos] = a;
            fill(pos + 1, left - a);
        }
    };

    out.emplace_back();
    if (ids.empty()) return out;
    for (unsigned d = 1; d <= n; ++d) fill(0, d);
    return out;
}

//------------------------------------------------------------------------------
// Polynomial
//------------------------------------------------------------------------------

class Polynomial
{
public:
    using term_map = std::map<MultiIndex, double, GradedLexLess>;

    Polynomial() = default;
    Polynomial(double c) // NOLINT: constants convert implicitly
    {
        if (c != 0.0) terms_.emplace(MultiIndex{}, c);
    }
    Polynomial(const MultiIndex& m, double c = 1.0)
    {
        if (c != 0.0) terms_.emplace(m, c);
    }

    static Polynomial variable(var_id i) { return Polynomial(MultiIndex::variable(i)); }

    const term_map& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }

    double coefficient(const MultiIndex& m) const
    {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    unsigned degree() const
    {
        unsigned d = 0;
        for (const auto& t : terms_) d = std::max(d, t.first.degree());
        return d;
    }

    void add_term(const MultiIndex& m, double c)
    {
        if (c == 0.0) return;
        auto [it, inserted] = terms_.emplace(m, c);
        if (!inserted)
        {
            it->second += c;
            if (it->second == 0.0) terms_.erase(it);
        }
    }

    Polynomial& operator+=(const Polynomial& p)
    {
        for (const auto& [m, c] : p.terms_) add_term(m, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& p)
    {
        for (const auto& [m, c] : p.terms_) add_term(m, -c);
        return *this;
    }
    Polynomial& operator*=(double s)
    {
        if (s == 0.0)
        {
            terms_.clear();
            return *this;
        }
        for (auto& t : terms_) t.second *= s;
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator-(Polynomial a) { return a *= -1.0; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b)
    {
        Polynomial out;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
        return out;
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

    std::string to_string() const
    {
        if (terms_.empty()) return "0";
        std::string s;
        bool first = true;
        // highest degree first reads more naturally
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it)
        {
            double c = it->second;
            if (!first) s += c < 0 ? " - " : " + ";
            else if (c < 0) s += "-";
            c = std::abs(c);
            if (it->first.is_constant())
                s += detail::format_double(c);
            else if (c == 1.0)
                s += it->first.to_string();
            else
                s += detail::format_double(c) + "*" + it->first.to_string();
            first = false;
        }
        return s;
    }

private:
    term_map terms_;
};

/// Smallest F such that p lies in R[X_i : i in F].
inline VariableSet support(const Polynomial& p)
{
    VariableSet out;
    for (const auto& t : p.terms()) out = out.union_with(t.first.support());
    return out;
}

inline double evaluate(const Polynomial& p, const Point& x)
{
    double v = 0.0;
    for (const auto& [m, c] : p.terms()) v += c * m.evaluate(x);
    return v;
}

//------------------------------------------------------------------------------
// QuadraticModule
//------------------------------------------------------------------------------

/// Finite generator list of a quadratic module; the constant 1 is implicit.
struct QuadraticModule
{
    std::vector<Polynomial> generators;

    /// Membership of x in K_Q = {g(x) >= -tol for every generator}.
    bool contains(const Point& x, double tol = 0.0) const
    {
        for (const auto& g : generators)
            if (evaluate(g, x) < -tol) return false;
        return true;
    }

    friend bool operator==(const QuadraticModule&, const QuadraticModule&) = default;
};

/// Generators whose support lies in F. A syntactic stand-in for Q ∩ R[X_F]:
/// the resulting set is a superset of the true K_{Q∩S}.
inline QuadraticModule restrict_module(const QuadraticModule& q, const VariableSet& f)
{
    QuadraticModule out;
    for (const auto& g : q.generators)
        if (support(g).is_subset_of(f)) out.generators.push_back(g);
    return out;
}

} // namespace momentlimit

#endif
