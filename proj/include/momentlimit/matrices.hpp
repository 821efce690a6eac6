#ifndef MOMENTLIMIT_MATRICES_HPP
#define MOMENTLIMIT_MATRICES_HPP

///
/// \file matrices.hpp
///
/// Truncated moment matrices M_n(gL) with entries L(x^u x^v g), u, v ranging
/// over monomials of degree <= n on a finite variable set, plus the two
/// numerical questions asked of them: positive semidefiniteness and the
/// rank comparison rank M_n = rank M_{n-1} (flatness).
///

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "functional.hpp"

namespace momentlimit
{

inline constexpr double default_psd_tolerance = 1e-8;
inline constexpr double default_rank_tolerance = 1e-7;

struct MomentMatrix
{
    std::vector<MultiIndex> basis;
    Eigen::MatrixXd entries;
    Polynomial shift{1.0};
    unsigned order = 0;

    Eigen::Index dimension() const { return entries.rows(); }
};

/// Builds M_n(gL) on F. Needs moments up to degree 2n + deg g.
inline MomentMatrix moment_matrix(const MomentFunctional& l, const VariableSet& f,
                                  unsigned n, const Polynomial& g = Polynomial(1.0))
{
    if (!support(g).is_subset_of(f))
        throw error(errc::not_a_subset, "shift polynomial " + g.to_string() +
                                            " not supported in " + f.to_string());
    if (!l.degree_available(2 * n + g.degree()))
        throw error(errc::degree_exceeded,
                    "order " + std::to_string(n) + " needs moments of degree " +
                        std::to_string(2 * n + g.degree()));

    MomentMatrix out;
    out.basis = monomials_up_to(f, n);
    out.shift = g;
    out.order = n;
    const auto dim = static_cast<Eigen::Index>(out.basis.size());
    out.entries.resize(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
    {
        for (Eigen::Index c = r; c < dim; ++c)
        {
            const MultiIndex uv = out.basis[r] * out.basis[c];
            double s = 0.0;
            for (const auto& [m, coef] : g.terms()) s += coef * l.moment(uv * m);
            out.entries(r, c) = s;
            out.entries(c, r) = s;
        }
    }
    return out;
}

struct PsdReport
{
    enum class verdict_type
    {
        psd,        ///< min eigenvalue clearly positive
        marginal,   ///< min eigenvalue within tolerance of zero
        not_psd,
    };

    double min_eigenvalue = 0.0;
    double matrix_norm = 0.0;
    verdict_type verdict = verdict_type::psd;
    double tolerance_used = 0.0;

    /// Positive semidefinite within tolerance: min eig >= -tol * max(1, norm).
    bool is_psd() const { return verdict != verdict_type::not_psd; }
};

inline std::string to_string(PsdReport::verdict_type v)
{
    switch (v)
    {
    case PsdReport::verdict_type::psd: return "psd";
    case PsdReport::verdict_type::marginal: return "marginal";
    case PsdReport::verdict_type::not_psd: return "not_psd";
    }
    return "?";
}

inline PsdReport psd_check(const Eigen::MatrixXd& m, double tol = default_psd_tolerance)
{
    if (!(tol > 0.0)) throw error(errc::invalid_argument, "tolerance must be positive");
    PsdReport rep;
    rep.tolerance_used = tol;
    if (m.size() == 0) return rep;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    rep.min_eigenvalue = ev.minCoeff();
    rep.matrix_norm = ev.cwiseAbs().maxCoeff();
    const double band = tol * std::max(1.0, rep.matrix_norm);
    if (rep.min_eigenvalue < -band)
        rep.verdict = PsdReport::verdict_type::not_psd;
    else if (std::abs(rep.min_eigenvalue) < band)
        rep.verdict = PsdReport::verdict_type::marginal;
    else
        rep.verdict = PsdReport::verdict_type::psd;
    return rep;
}

inline PsdReport psd_check(const MomentMatrix& m, double tol = default_psd_tolerance)
{
    return psd_check(m.entries, tol);
}

/// Number of eigenvalues above tol * max(1, ||m||).
inline int numerical_rank(const Eigen::MatrixXd& m, double tol = default_rank_tolerance)
{
    if (m.size() == 0) return 0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double cut = tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
    return static_cast<int>((ev.array() > cut).count());
}

struct FlatnessReport
{
    int rank_n = 0;
    int rank_n_minus_1 = 0;
    bool is_flat = false;
    double rank_tolerance = default_rank_tolerance;
    unsigned order = 0;
};

inline FlatnessReport flatness_of(const MomentMatrix& m_n, double rank_tol = default_rank_tolerance)
{
    if (m_n.order < 1) throw error(errc::invalid_argument, "flatness needs order >= 1");
    // M_{n-1} is the leading principal block of M_n under graded-lex order.
    Eigen::Index lower = 0;
    while (lower < m_n.dimension() && m_n.basis[lower].degree() < m_n.order) ++lower;
    FlatnessReport rep;
    rep.order = m_n.order;
    rep.rank_tolerance = rank_tol;
    rep.rank_n = numerical_rank(m_n.entries, rank_tol);
    rep.rank_n_minus_1 = numerical_rank(m_n.entries.topLeftCorner(lower, lower), rank_tol);
    rep.is_flat = rep.rank_n == rep.rank_n_minus_1;
    return rep;
}

inline FlatnessReport flatness(const MomentFunctional& l, const VariableSet& f, unsigned n,
                               double rank_tol = default_rank_tolerance)
{
    if (n < 1) throw error(errc::invalid_argument, "flatness needs order >= 1");
    return flatness_of(moment_matrix(l, f, n), rank_tol);
}

/// CSV with the basis monomials as header row and first column.
inline void write_csv(std::ostream& os, const MomentMatrix& m)
{
    os << "\"\"";
    for (const auto& b : m.basis) os << ",\"" << b.to_string() << '"';
    os << '\n';
    for (Eigen::Index r = 0; r < m.dimension(); ++r)
    {
        os << '"' << m.basis[r].to_string() << '"';
        for (Eigen::Index c = 0; c < m.dimension(); ++c)
            os << ',' << detail::format_double(m.entries(r, c));
        os << '\n';
    }
}

} // namespace momentlimit

#endif
