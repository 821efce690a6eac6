#ifndef MOMENTLIMIT_TESTS_ORACLES_HPP
#define MOMENTLIMIT_TESTS_ORACLES_HPP

// Reference computations used as expected values in the tests. Nothing here
// calls into the library's numerical code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle
{

/// (k-1)!! for even k, 0 for odd k: E[Z^k] for Z ~ N(0,1).
inline double gaussian_moment(unsigned k, double variance = 1.0)
{
    if (k % 2) return 0.0;
    double v = 1.0;
    for (unsigned j = 1; j < k; j += 2) v *= j;
    return v * std::pow(variance, k / 2.0);
}

inline std::uint64_t binomial(unsigned n, unsigned k)
{
    std::uint64_t r = 1;
    for (unsigned j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

/// Dense-coordinate atom list: points[k][d], weights[k].
struct Atoms
{
    std::vector<std::vector<double>> points;
    std::vector<double> weights;
};

/// sum_k w_k prod_d x_{k,d}^{e_d}
inline double atomic_moment(const Atoms& a, const std::vector<unsigned>& exps)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.weights.size(); ++k)
    {
        double t = a.weights[k];
        for (std::size_t d = 0; d < exps.size(); ++d)
            for (unsigned e = 0; e < exps[d]; ++e) t *= a.points[k][d];
        s += t;
    }
    return s;
}

/// Standard normal CDF at x for variance v.
inline double normal_cdf(double x, double v = 1.0)
{
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0 * v)));
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf)
{
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        const double f = cdf(xs[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

/// Asymptotic KS critical value at significance alpha = 0.01.
inline double ks_critical_001(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

/// Smallest max-error over all atom permutations (k <= 8). Error is the max of
/// coordinate and weight differences. Returns +inf when the counts differ.
inline double matched_error(const Atoms& truth, const Atoms& got)
{
    const std::size_t k = truth.weights.size();
    if (got.weights.size() != k) return std::numeric_limits<double>::infinity();
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do
    {
        double e = 0.0;
        for (std::size_t a = 0; a < k; ++a)
        {
            const std::size_t b = perm[a];
            e = std::max(e, std::abs(truth.weights[a] - got.weights[b]));
            for (std::size_t d = 0; d < truth.points[a].size(); ++d)
                e = std::max(e, std::abs(truth.points[a][d] - got.points[b][d]));
        }
        best = std::min(best, e);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// k atoms uniform in [-2,2]^dim with weights uniform on the simplex.
inline Atoms random_atoms(std::mt19937_64& rng, std::size_t k, std::size_t dim)
{
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::exponential_distribution<double> expo(1.0);
    Atoms a;
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j)
    {
        std::vector<double> p(dim);
        for (auto& x : p) x = coord(rng);
        a.points.push_back(p);
        a.weights.push_back(expo(rng));
        total += a.weights.back();
    }
    for (auto& w : a.weights) w /= total;
    return a;
}

/// Smallest pairwise max-norm distance between atoms.
inline double min_separation(const Atoms& a)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.points.size(); ++i)
        for (std::size_t j = i + 1; j < a.points.size(); ++j)
        {
            double d = 0.0;
            for (std::size_t c = 0; c < a.points[i].size(); ++c)
                d = std::max(d, std::abs(a.points[i][c] - a.points[j][c]));
            best = std::min(best, d);
        }
    return best;
}

} // namespace oracle

#endif
