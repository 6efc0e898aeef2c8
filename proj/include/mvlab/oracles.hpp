#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "mvlab/core.hpp"

namespace mvlab::oracles {

/// Classic RK4 on a scalar ODE y' = f(t, y). Reference integrator for the
/// closed-form moment ODEs below; deliberately independent of the particle
/// simulation path.
inline double rk4_integrate(const std::function<double(double, double)>& f, double y0, double t0,
                            double t1, int steps) {
    require(steps >= 1, "rk4_integrate: need at least one step");
    double h = (t1 - t0) / steps;
    double y = y0;
    for (int i = 0; i < steps; ++i) {
        double t = t0 + i * h;
        double k1 = f(t, y);
        double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
        double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
        double k4 = f(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

/// Second-moment ODE of the example1 dynamics (Ito on X^2, expectations):
///   dm2/dt = (sqrt2 + lambda)^2 m2 - 2 lambda m2^2.
inline std::function<double(double, double)> example1_m2_rhs(double lambda) {
    double c = (std::numbers::sqrt2 + lambda) * (std::numbers::sqrt2 + lambda);
    return [c, lambda](double, double m2) { return c * m2 - 2.0 * lambda * m2 * m2; };
}

/// Mean and second-moment ODEs of the example3 dynamics:
///   dm/dt  = (lambda - 5) m
///   dm2/dt = (2 lambda - 11) m2 + (2 + 2 lambda + lambda^2) m^2.
inline std::function<double(double, double)> example3_mean_rhs(double lambda) {
    return [lambda](double, double m) { return (lambda - 5.0) * m; };
}

inline double example3_second_moment(double lambda, double m0, double m2_0, double t, int steps) {
    // The pair is triangular: solve the mean in closed form, feed it into m2.
    auto m = [lambda, m0](double s) { return m0 * std::exp((lambda - 5.0) * s); };
    auto rhs = [lambda, &m](double s, double m2) {
        double ms = m(s);
        return (2.0 * lambda - 11.0) * m2 + (2.0 + 2.0 * lambda + lambda * lambda) * ms * ms;
    };
    return rk4_integrate(rhs, m2_0, 0.0, t, steps);
}

/// L2 contraction rate of the example2 deviation process Y = X - E X:
///   d E Y^2 / dt = (1 - 6 lambda) E Y^2.
inline double example2_deviation_second_moment(double lambda, double y2_0, double t) {
    return y2_0 * std::exp((1.0 - 6.0 * lambda) * t);
}

/// Closed-form coupled gap of the mean-drift counterexample: under shared
/// noise the per-particle gap is Delta_0 + E[Delta_0](e^t - 1), so the
/// off-atom gap equals E[Delta_0] times this factor.
inline double counterexample_gap_factor(double t) { return std::exp(t) - 1.0; }

/// Partial sums of e^t; the Picard iterate-n mean started from 1.
inline double exp_partial_sum(int n, double t) {
    double term = 1.0, acc = 1.0;
    for (int j = 1; j <= n; ++j) {
        term *= t / j;
        acc += term;
    }
    return acc;
}

/// Monte Carlo standard deviation of the initial-gap mean estimator for the
/// atom construction X_{k,0} = k 1{U <= 1/k}: sd = sqrt((k - 1) / N).
inline double counterexample_initial_gap_sd(long long k, long long n_particles) {
    require(k >= 1 && n_particles >= 1, "counterexample_initial_gap_sd: bad arguments");
    return std::sqrt(static_cast<double>(k - 1) / static_cast<double>(n_particles));
}

/// Minimum transport cost by explicit permutation enumeration on 1D arrays,
/// kept separate from the measures module (test oracle).
inline double brute_force_w2_1d(std::vector<double> xs, std::vector<double> ys) {
    require(xs.size() == ys.size() && xs.size() <= 8, "brute_force_w2_1d: need equal N <= 8");
    std::vector<int> perm(xs.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double g = xs[i] - ys[perm[i]];
            acc += g * g;
        }
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / xs.size());
}

}  // namespace mvlab::oracles
