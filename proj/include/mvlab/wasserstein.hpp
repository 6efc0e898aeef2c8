#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "mvlab/core.hpp"
#include "mvlab/empirical_measure.hpp"
#include "mvlab/noise.hpp"

namespace mvlab {

namespace detail {

inline void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p) {
    require(p == 1 || p == 2, "Wasserstein order p must be 1 or 2");
    require(mu.dim() == nu.dim(), "Wasserstein: dimension mismatch");
    require(mu.size() == nu.size(), "Wasserstein: only equal-N empirical measures supported");
}

inline double pair_cost(std::span<const double> x, std::span<const double> y, int p) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double dk = x[k] - y[k];
        s += dk * dk;
    }
    return p == 2 ? s : std::sqrt(s);
}

// Kuhn-Munkres with potentials, O(n^3). cost is n x n row-major.
inline double min_assignment_cost(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = match[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<std::size_t>(match[j] - 1) * n + (j - 1)];
    return total;
}

}  // namespace detail

/// Exact W_p in one dimension: sort both samples and pair by rank.
inline double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p) {
    detail::check_pair(mu, nu, p);
    require(mu.dim() == 1, "wasserstein_1d: inputs must be one-dimensional");
    auto xs = std::vector<double>(mu.data().begin(), mu.data().end());
    auto ys = std::vector<double>(nu.data().begin(), nu.data().end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double g = std::abs(xs[i] - ys[i]);
        acc += (p == 2) ? g * g : g;
    }
    acc /= static_cast<double>(xs.size());
    return p == 2 ? std::sqrt(acc) : acc;
}

inline constexpr int kAssignmentCapDefault = 2048;

/// Exact W_p for equal-N uniform empirical measures in any dimension via
/// optimal assignment on the pairwise cost matrix (the coupling infimum is
/// attained at a permutation in this setting).
inline double wasserstein_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                     int p, int cap = kAssignmentCapDefault) {
    detail::check_pair(mu, nu, p);
    int n = mu.size();
    require(n <= cap,
            "wasserstein_assignment: N exceeds the assignment cap; use sliced_wasserstein");
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost[static_cast<std::size_t>(i) * n + j] = detail::pair_cost(mu.point(i), nu.point(j), p);
    double total = detail::min_assignment_cost(cost, n);
    double mean_cost = total / n;
    return p == 2 ? std::sqrt(mean_cost) : mean_cost;
}

/// Test oracle: minimum over all N! pairings, N <= 8.
inline double brute_force_wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                      int p) {
    detail::check_pair(mu, nu, p);
    int n = mu.size();
    require(n <= 8, "brute_force_wasserstein: N must be at most 8");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i)
            total += detail::pair_cost(mu.point(i), nu.point(perm[i]), p);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    double mean_cost = best / n;
    return p == 2 ? std::sqrt(mean_cost) : mean_cost;
}

/// Monte Carlo sliced estimate: average of 1D W_p^p over random unit
/// directions, then the p-th root. Directions come from the keyed source, so
/// the estimate is deterministic per (seed, label).
inline double sliced_wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p,
                                 int n_projections, const BrownianSource& src) {
    detail::check_pair(mu, nu, p);
    require(n_projections >= 1, "sliced_wasserstein: need at least one projection");
    int d = mu.dim();
    BrownianSource dirs = src.split("slice-directions").with_n(d).with_dt(1.0);
    std::vector<double> dir(d);
    std::vector<double> px(mu.size()), py(nu.size());
    double acc = 0.0;
    for (int j = 0; j < n_projections; ++j) {
        dirs.fill_increment(static_cast<std::uint64_t>(j), 0, dir);
        double norm = std::sqrt(std::inner_product(dir.begin(), dir.end(), dir.begin(), 0.0));
        if (norm == 0.0) {
            dir[0] = 1.0;
            norm = 1.0;
        }
        for (double& c : dir) c /= norm;
        for (int i = 0; i < mu.size(); ++i) {
            auto x = mu.point(i);
            px[i] = std::inner_product(x.begin(), x.end(), dir.begin(), 0.0);
        }
        for (int i = 0; i < nu.size(); ++i) {
            auto y = nu.point(i);
            py[i] = std::inner_product(y.begin(), y.end(), dir.begin(), 0.0);
        }
        double w = wasserstein_1d(EmpiricalMeasure(px, mu.size(), 1),
                                  EmpiricalMeasure(py, nu.size(), 1), p);
        acc += (p == 2) ? w * w : w;
    }
    acc /= n_projections;
    return p == 2 ? std::sqrt(acc) : acc;
}

/// Dispatch helper used by the simulation layers: exact sorted pairing in 1D,
/// exact assignment while it fits under the cap, sliced estimate beyond.
inline double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p,
                          int cap = kAssignmentCapDefault) {
    if (mu.dim() == 1 && mu.size() == nu.size()) return wasserstein_1d(mu, nu, p);
    if (mu.size() <= cap) return wasserstein_assignment(mu, nu, p, cap);
    BrownianSource src(0x5ced5ced5ced5cedull, 1, 1.0, "wasserstein-fallback");
    return sliced_wasserstein(mu, nu, p, 128, src);
}

/// ((1/N) sum_i sup_i^2)^{1/2} over per-particle running sups; dominates the
/// path-space W2 between the two coupled laws.
inline double path_sup_gap(std::span<const double> per_particle_sup) {
    require(!per_particle_sup.empty(), "path_sup_gap: empty sup vector");
    double acc = 0.0;
    for (double s : per_particle_sup) acc += s * s;
    return std::sqrt(acc / static_cast<double>(per_particle_sup.size()));
}

/// Empirical P(|A - B| > eps) under the given pairing of samples.
inline double convergence_in_probability_stat(std::span<const double> samples_a,
                                              std::span<const double> samples_b, double eps) {
    require(samples_a.size() == samples_b.size(),
            "convergence_in_probability_stat: sample vectors must have equal length");
    require(!samples_a.empty(), "convergence_in_probability_stat: empty samples");
    require(eps > 0.0, "convergence_in_probability_stat: eps must be positive");
    std::size_t count = 0;
    for (std::size_t i = 0; i < samples_a.size(); ++i)
        if (std::abs(samples_a[i] - samples_b[i]) > eps) ++count;
    return static_cast<double>(count) / static_cast<double>(samples_a.size());
}

}  // namespace mvlab
