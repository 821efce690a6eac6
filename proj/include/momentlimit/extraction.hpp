#ifndef MOMENTLIMIT_EXTRACTION_HPP
#define MOMENTLIMIT_EXTRACTION_HPP

///
/// \file extraction.hpp
///
/// Atomic representing measures from flat moment matrices, and the
/// compatibility checks between measures on nested variable sets.
///
/// Let M_n be flat with rank r. Choose r monomials B of degree <= n-1 whose
/// block M[B,B] is nonsingular and factor M[B,B] = R^T R. If the underlying
/// measure has atoms x_k with weights w_k and V = [b(x_k)], then
/// R = Q W^{1/2} V for an orthogonal Q, hence
///
///   S_i := R^{-T} M[B, X_i B] R^{-1} = Q diag(x_{k,i}) Q^T,
///   R^{-T} M[B, 1]                   = Q W^{1/2} 1.
///
/// The S_i are symmetric and commute; an eigenbasis of a generic linear
/// combination diagonalizes all of them, giving coordinates as Rayleigh
/// quotients and weights as squared projections.
///
/// In one variable B = {1, x, ..., x^{r-1}} and S_1 is the Jacobi matrix of
/// the three-term recurrence; that case is computed directly from the
/// Cholesky factor of the Hankel matrix (Golub-Welsch).
///

#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "family.hpp"
#include "matrices.hpp"

namespace momentlimit
{

struct ExtractionOptions
{
    double rank_tolerance = default_rank_tolerance;
    /// Relative moment mismatch above which the solve is rejected.
    double moment_tolerance = 1e-6;
    double merge_tolerance = default_merge_tolerance;
    /// Minimum relative eigenvalue separation of the diagonalized combination.
    double separation_tolerance = 1e-9;
    /// Eigenvalues of M_n or M_{n-1} strictly between rank_gap_floor and
    /// rank_tolerance (both relative to max(1, norm)) make the rank decision
    /// unreliable; such orders are refused. Set equal to rank_tolerance to disable.
    double rank_gap_floor = 1e-11;
};

struct ExtractionResult
{
    AtomicMeasure measure;
    unsigned order = 0;
    int rank = 0;
    /// max over |m| <= 2n of |L(x^m) - mu(x^m)| / max(1, |L(x^m)|)
    double moment_residual = 0.0;
    double rank_tolerance = default_rank_tolerance;
};

namespace detail
{

struct NodesAndWeights
{
    std::vector<std::vector<double>> nodes; ///< nodes[k][j] = coordinate j of atom k
    std::vector<double> weights;
};

/// Gauss quadrature with r nodes from the moments m_0..m_{2r-1} of a measure
/// whose Hankel matrix H_{r-1} is positive definite.
inline NodesAndWeights golub_welsch(const std::vector<double>& moments, int r)
{
    // Upper-trapezoidal Cholesky rows 0..r-1 of the (r+1)x(r+1) Hankel matrix.
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(r, r + 1);
    for (int j = 0; j < r; ++j)
    {
        double d = moments[2 * j];
        for (int l = 0; l < j; ++l) d -= u(l, j) * u(l, j);
        if (!(d > 0.0))
            throw error(errc::ill_conditioned, "Hankel matrix not positive definite at order " +
                                                   std::to_string(j));
        u(j, j) = std::sqrt(d);
        for (int k = j + 1; k <= r; ++k)
        {
            double s = moments[j + k];
            for (int l = 0; l < j; ++l) s -= u(l, j) * u(l, k);
            u(j, k) = s / u(j, j);
        }
    }

    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(r, r);
    for (int j = 0; j < r; ++j)
    {
        double a = u(j, j + 1) / u(j, j);
        if (j > 0) a -= u(j - 1, j) / u(j - 1, j - 1);
        jacobi(j, j) = a;
        if (j + 1 < r)
        {
            const double b = u(j + 1, j + 1) / u(j, j);
            jacobi(j, j + 1) = b;
            jacobi(j + 1, j) = b;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    NodesAndWeights out;
    for (int k = 0; k < r; ++k)
    {
        out.nodes.push_back({es.eigenvalues()(k)});
        const double v0 = es.eigenvectors()(0, k);
        out.weights.push_back(moments[0] * v0 * v0);
    }
    return out;
}

/// Pivoted Cholesky on the candidate block; returns r pivot positions.
inline std::vector<Eigen::Index> select_basis(const Eigen::MatrixXd& m, Eigen::Index candidates,
                                              int r)
{
    std::vector<Eigen::Index> chosen;
    Eigen::VectorXd diag = m.diagonal().head(candidates);
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(candidates, r);
    std::vector<bool> used(static_cast<std::size_t>(candidates), false);
    for (int step = 0; step < r; ++step)
    {
        Eigen::Index best = -1;
        for (Eigen::Index c = 0; c < candidates; ++c)
            if (!used[c] && (best < 0 || diag(c) > diag(best))) best = c;
        if (best < 0 || !(diag(best) > 0.0))
            throw error(errc::ill_conditioned, "moment matrix lost rank during basis selection");
        used[best] = true;
        chosen.push_back(best);
        const double piv = std::sqrt(diag(best));
        for (Eigen::Index c = 0; c < candidates; ++c)
        {
            if (used[c] && c != best) continue;
            double s = m(c, best);
            for (int k = 0; k < step; ++k) s -= l(c, k) * l(best, k);
            l(c, step) = s / piv;
            if (!used[c]) diag(c) -= l(c, step) * l(c, step);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

inline NodesAndWeights multiplication_operators(const MomentMatrix& mm, const VariableSet& f, int r,
                                                const ExtractionOptions& opt)
{
    Eigen::Index lower = 0;
    while (lower < mm.dimension() && mm.basis[lower].degree() < mm.order) ++lower;
    const auto basis = select_basis(mm.entries, lower, r);

    auto position = [&](const MultiIndex& m) {
        auto it = std::lower_bound(mm.basis.begin(), mm.basis.end(), m, GradedLexLess{});
        return static_cast<Eigen::Index>(it - mm.basis.begin());
    };

    Eigen::MatrixXd block(r, r);
    Eigen::VectorXd ones(r);
    for (int a = 0; a < r; ++a)
    {
        ones(a) = mm.entries(basis[a], 0);
        for (int b = 0; b < r; ++b) block(a, b) = mm.entries(basis[a], basis[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success)
        throw error(errc::ill_conditioned, "selected moment block not positive definite");
    const Eigen::MatrixXd upper = llt.matrixU();

    std::vector<Eigen::MatrixXd> ops;
    for (var_id i : f)
    {
        const MultiIndex xi = MultiIndex::variable(i);
        Eigen::MatrixXd shifted(r, r);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b)
                shifted(a, b) = mm.entries(basis[a], position(mm.basis[basis[b]] * xi));
        // R^{-T} shifted R^{-1}
        Eigen::MatrixXd t = upper.transpose().triangularView<Eigen::Lower>().solve(shifted);
        t = upper.transpose().triangularView<Eigen::Lower>().solve(t.transpose().eval());
        ops.push_back(0.5 * (t + t.transpose()));
    }
    const Eigen::VectorXd root_w =
        upper.transpose().triangularView<Eigen::Lower>().solve(ones);

    // Several generic combinations; keep the best separated spectrum.
    std::mt19937_64 rng(0x6d6f6d656e74ULL);
    std::normal_distribution<double> gauss;
    double best_gap = -1.0;
    Eigen::MatrixXd best_vectors;
    for (int attempt = 0; attempt < 8; ++attempt)
    {
        Eigen::MatrixXd comb = Eigen::MatrixXd::Zero(r, r);
        for (const auto& s : ops) comb += gauss(rng) * s;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comb);
        const auto& ev = es.eigenvalues();
        double gap = std::numeric_limits<double>::infinity();
        for (int k = 1; k < r; ++k) gap = std::min(gap, ev(k) - ev(k - 1));
        const double scale = std::max(1e-300, ev.cwiseAbs().maxCoeff());
        gap = r > 1 ? gap / scale : 1.0;
        if (gap > best_gap)
        {
            best_gap = gap;
            best_vectors = es.eigenvectors();
        }
    }
    if (best_gap < opt.separation_tolerance)
        throw error(errc::ill_conditioned, "atoms not separated by any tested direction");

    NodesAndWeights out;
    for (int k = 0; k < r; ++k)
    {
        const Eigen::VectorXd q = best_vectors.col(k);
        std::vector<double> x;
        for (const auto& s : ops) x.push_back(q.dot(s * q));
        out.nodes.push_back(std::move(x));
        const double p = q.dot(root_w);
        out.weights.push_back(p * p);
    }
    return out;
}

} // namespace detail

/// Atomic measure with rank(M_n) atoms reproducing the moments of L on F up to
/// degree 2n. Requires M_n(L on F) to be flat.
inline ExtractionResult extract(const MomentFunctional& l, const VariableSet& f, unsigned n,
                                const ExtractionOptions& opt = {})
{
    const MomentFunctional lf = l.restrict(f);
    if (n < 1) throw error(errc::invalid_argument, "extraction order must be >= 1");
    const MomentMatrix mm = moment_matrix(lf, f, n);
    const FlatnessReport flat = flatness_of(mm, opt.rank_tolerance);
    if (!flat.is_flat)
        throw error(errc::not_flat, "rank M_" + std::to_string(n) + " = " +
                                        std::to_string(flat.rank_n) + " but rank M_" +
                                        std::to_string(n - 1) + " = " +
                                        std::to_string(flat.rank_n_minus_1));
    const int r = flat.rank_n;
    if (r == 0) throw error(errc::ill_conditioned, "zero moment matrix");
    {
        const auto lower = static_cast<Eigen::Index>(monomials_up_to(f, n - 1).size());
        for (const Eigen::MatrixXd& block : {Eigen::MatrixXd(mm.entries), Eigen::MatrixXd(mm.entries.topLeftCorner(lower, lower))})
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
            const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
            for (double ev : es.eigenvalues())
                if (ev > opt.rank_gap_floor * scale && ev <= opt.rank_tolerance * scale)
                    throw error(errc::ill_conditioned,
                                "eigenvalue " + detail::format_double(ev / scale) +
                                    " (relative) lies in the ambiguous rank band at order " + std::to_string(n));
        }
    }

    detail::NodesAndWeights nw;
    if (f.empty())
    {
        nw.nodes.push_back({});
        nw.weights.push_back(1.0);
    }
    else if (f.size() == 1)
    {
        std::vector<double> moments;
        const var_id i = *f.begin();
        for (unsigned k = 0; k <= 2 * n; ++k) moments.push_back(lf.moment(MultiIndex::variable(i, k)));
        nw = detail::golub_welsch(moments, r);
    }
    else
    {
        nw = detail::multiplication_operators(mm, f, r, opt);
    }

    double total = 0.0;
    for (double w : nw.weights)
    {
        if (!(w > 0.0) || !std::isfinite(w))
            throw error(errc::ill_conditioned, "nonpositive atom weight recovered");
        total += w;
    }
    if (std::abs(total - 1.0) > opt.moment_tolerance)
        throw error(errc::ill_conditioned,
                    "recovered weights sum to " + detail::format_double(total));

    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < nw.weights.size(); ++k)
    {
        Atom a;
        a.weight = nw.weights[k] / total;
        std::size_t j = 0;
        for (var_id i : f) a.point.emplace(i, nw.nodes[k][j++]);
        atoms.push_back(std::move(a));
    }
    ExtractionResult res{AtomicMeasure(f, std::move(atoms), opt.merge_tolerance), n, r, 0.0, opt.rank_tolerance};

    for (const auto& m : monomials_up_to(f, 2 * n))
    {
        const double target = lf.moment(m);
        const double err = std::abs(res.measure.moment(m) - target) / std::max(1.0, std::abs(target));
        res.moment_residual = std::max(res.moment_residual, err);
    }
    if (!(res.moment_residual <= opt.moment_tolerance))
        throw error(errc::ill_conditioned, "moment residual " +
                                               detail::format_double(res.moment_residual) +
                                               " exceeds tolerance");
    return res;
}

inline constexpr double finest_rank_tolerance = 1e-10;

/// Extraction at the smallest flat order in [1, max_n] that passes the
/// conditioning guards. If none does at opt.rank_tolerance, the cut is lowered
/// a decade at a time (down to finest_rank_tolerance) so that a weak but
/// clearly separated eigenvalue is counted instead of discarded.
inline ExtractionResult extract_lowest(const MomentFunctional& l, const VariableSet& f, unsigned max_n,
                                       const ExtractionOptions& opt = {})
{
    std::optional<error> last;
    ExtractionOptions o = opt;
    for (;;)
    {
        for (unsigned n = 1; n <= max_n && l.degree_available(2 * n); ++n)
        {
            if (!flatness(l.restrict(f), f, n, o.rank_tolerance).is_flat) continue;
            try
            {
                return extract(l, f, n, o);
            }
            catch (const error& e)
            {
                if (e.code() != errc::ill_conditioned) throw;
                last = e;
            }
        }
        if (o.rank_tolerance / 10.0 < finest_rank_tolerance * 0.999 ||
            o.rank_tolerance / 10.0 <= o.rank_gap_floor)
            break;
        o.rank_tolerance /= 10.0;
    }
    if (last) throw *last;
    throw error(errc::not_flat, "no flat order up to " + std::to_string(max_n) + " on " + f.to_string());
}

/// True iff every atom satisfies g(x) >= -tol for every generator.
inline bool check_support(const AtomicMeasure& mu, const QuadraticModule& q, double tol = 1e-9)
{
    for (const auto& g : q.generators)
        if (!support(g).is_subset_of(mu.variables()))
            throw error(errc::not_a_subset, "generator " + g.to_string() +
                                                " not supported in " +
                                                mu.variables().to_string());
    for (const auto& a : mu.atoms())
        if (!q.contains(a.point, tol)) return false;
    return true;
}

struct ExactnessReport
{
    std::vector<std::pair<VariableSet, VariableSet>> pairs_checked;
    double max_discrepancy = 0.0;
    std::optional<std::pair<VariableSet, VariableSet>> worst_pair;
    bool exact = true;
    double tolerance = 0.0;
};

inline constexpr unsigned default_exactness_degree = 4;

/// Compares pushforward(mu_{F'}, F) with mu_F through their moments of degree
/// up to the smaller certified degree of the two (capped at max_degree).
inline ExactnessReport check_exactness(const ProjectiveFamily& family,
                                       const std::vector<std::pair<VariableSet, VariableSet>>& pairs,
                                       double tol, unsigned max_degree = default_exactness_degree)
{
    ExactnessReport rep;
    rep.tolerance = tol;
    for (const auto& [small, big] : pairs)
    {
        if (!small.is_subset_of(big))
            throw error(errc::not_a_subset, small.to_string() + " not in " + big.to_string());
        const Marginal& mu_small = family.at(small);
        const Marginal& mu_big = family.at(big);
        unsigned degree = max_degree;
        if (auto d = family.certified_degree(small)) degree = std::min(degree, *d);
        if (auto d = family.certified_degree(big)) degree = std::min(degree, *d);

        const Marginal image = pushforward(mu_big, small);
        double disc = 0.0;
        for (const auto& m : monomials_up_to(small, degree))
            disc = std::max(disc, std::abs(moment_of(image, m) - moment_of(mu_small, m)));
        rep.pairs_checked.emplace_back(small, big);
        if (!rep.worst_pair || disc > rep.max_discrepancy)
        {
            rep.max_discrepancy = disc;
            rep.worst_pair = std::make_pair(small, big);
        }
    }
    rep.exact = rep.max_discrepancy <= tol;
    return rep;
}

} // namespace momentlimit

#endif
