#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mvlab/core.hpp"
#include "mvlab/empirical_measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/particle.hpp"
#include "mvlab/wasserstein.hpp"

namespace mvlab {

/// V with its state derivatives and Lions derivatives, supplied analytically.
/// Measure integrals in the generator are taken exactly over the empirical
/// support points.
struct LyapunovFunctional {
    using ValueFn = std::function<double(std::span<const double> x, const EmpiricalMeasure&)>;
    using VecFn = std::function<void(std::span<const double> x, const EmpiricalMeasure&,
                                     std::span<double> out)>;
    using MatFn = VecFn;  // d x d row-major output
    using LionsVecFn = std::function<void(std::span<const double> x, const EmpiricalMeasure&,
                                          std::span<const double> y, std::span<double> out)>;
    using LionsMatFn = LionsVecFn;

    int d = 1;
    ValueFn value;       // V(x, mu) >= 0
    VecFn dx;            // gradient in x, length d
    MatFn dxx;           // Hessian in x, d x d
    LionsVecFn dmu;      // Lions derivative, length d
    LionsMatFn dy_dmu;   // derivative in y of the Lions derivative, d x d
    double rate = 0.0;   // lambda for the growth-mode condition, gamma for the coercive mode
    double growth_ell = 2.0;  // exponent in the coefficient growth bound
    double growth_K = 0.0;    // constant in the coefficient growth bound
};

/// Builds a d=1 functional from scalar callables.
inline LyapunovFunctional scalar_lyapunov(
    std::function<double(double, const EmpiricalMeasure&)> v,
    std::function<double(double, const EmpiricalMeasure&)> dv,
    std::function<double(double, const EmpiricalMeasure&)> ddv,
    std::function<double(double, const EmpiricalMeasure&, double)> dmu,
    std::function<double(double, const EmpiricalMeasure&, double)> dydmu) {
    LyapunovFunctional f;
    f.d = 1;
    f.value = [v = std::move(v)](std::span<const double> x, const EmpiricalMeasure& mu) {
        return v(x[0], mu);
    };
    f.dx = [dv = std::move(dv)](std::span<const double> x, const EmpiricalMeasure& mu,
                                std::span<double> out) { out[0] = dv(x[0], mu); };
    f.dxx = [ddv = std::move(ddv)](std::span<const double> x, const EmpiricalMeasure& mu,
                                   std::span<double> out) { out[0] = ddv(x[0], mu); };
    f.dmu = [dmu = std::move(dmu)](std::span<const double> x, const EmpiricalMeasure& mu,
                                   std::span<const double> y, std::span<double> out) {
        out[0] = dmu(x[0], mu, y[0]);
    };
    f.dy_dmu = [dydmu = std::move(dydmu)](std::span<const double> x, const EmpiricalMeasure& mu,
                                          std::span<const double> y, std::span<double> out) {
        out[0] = dydmu(x[0], mu, y[0]);
    };
    return f;
}

/// V(x, mu) = x^6 + int y^10 mu(dy), the functional paired with example1.
inline LyapunovFunctional example1_lyapunov() {
    auto f = scalar_lyapunov(
        [](double x, const EmpiricalMeasure& mu) {
            return std::pow(x, 6) + mu.component_moment(0, 10);
        },
        [](double x, const EmpiricalMeasure&) { return 6.0 * std::pow(x, 5); },
        [](double x, const EmpiricalMeasure&) { return 30.0 * std::pow(x, 4); },
        [](double, const EmpiricalMeasure&, double z) { return 10.0 * std::pow(z, 9); },
        [](double, const EmpiricalMeasure&, double z) { return 90.0 * std::pow(z, 8); });
    f.rate = 270.0;
    f.growth_ell = 5.0 / 3.0;  // |b|^{2l}+|sigma|^{2l} tracks x^{10/3*...}; set with K below
    f.growth_K = 0.0;          // caller pins (ell, K) against a declared sample box
    return f;
}

/// V(x, mu) = (1/4)(x - int y mu(dy))^4, the functional paired with example2.
inline LyapunovFunctional example2_lyapunov() {
    auto f = scalar_lyapunov(
        [](double x, const EmpiricalMeasure& mu) { return 0.25 * std::pow(x - mu.mean(0), 4); },
        [](double x, const EmpiricalMeasure& mu) { return std::pow(x - mu.mean(0), 3); },
        [](double x, const EmpiricalMeasure& mu) { return 3.0 * std::pow(x - mu.mean(0), 2); },
        [](double x, const EmpiricalMeasure& mu, double) {
            return -std::pow(x - mu.mean(0), 3);
        },
        [](double, const EmpiricalMeasure&, double) { return 0.0; });
    f.rate = 0.0;
    return f;
}

/// A sampled evaluation point for the condition checkers.
struct ConditionSample {
    double t = 0.0;
    std::vector<double> x;
    EmpiricalMeasure mu;
};

struct WorstSample {
    double t = 0.0;
    std::vector<double> x;
    double mu_mean = 0.0;
    double mu_second_moment = 0.0;
};

/// Violations are reported slack-adjusted: max_violation is the max over
/// samples of (lhs - rhs - per-sample slack), so passed <=> max_violation <= 0.
struct ConditionReport {
    std::string condition;
    int n_samples = 0;
    double max_violation = -std::numeric_limits<double>::infinity();
    double slack = 0.0;
    WorstSample worst;
    bool passed = false;
};

namespace detail {

inline double trace_product(std::span<const double> a, std::span<const double> m, int d) {
    // tr(A M) with both d x d row-major.
    double s = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            s += a[static_cast<std::size_t>(i) * d + j] * m[static_cast<std::size_t>(j) * d + i];
    return s;
}

inline void outer_product(std::span<const double> sigma, int d, int n, std::span<double> a) {
    // a = sigma sigma^T, sigma is d x n row-major.
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int c = 0; c < n; ++c)
                s += sigma[static_cast<std::size_t>(i) * n + c] *
                     sigma[static_cast<std::size_t>(j) * n + c];
            a[static_cast<std::size_t>(i) * d + j] = s;
        }
}

inline double frobenius_norm(std::span<const double> m) {
    double s = 0.0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
}

template <class Fn>
ConditionReport run_condition(std::string name, std::span<const ConditionSample> samples,
                              Fn&& violation_of) {
    require(!samples.empty(), "condition check: sample set must be non-empty");
    ConditionReport report;
    report.condition = std::move(name);
    report.n_samples = static_cast<int>(samples.size());
    for (const auto& s : samples) {
        double v = violation_of(s);
        if (v > report.max_violation) {
            report.max_violation = v;
            report.worst.t = s.t;
            report.worst.x = s.x;
            report.worst.mu_mean = s.mu.mean(0);
            report.worst.mu_second_moment = s.mu.second_moment(0);
        }
    }
    report.passed = report.max_violation <= report.slack;
    return report;
}

}  // namespace detail

/// Distribution-dependent generator applied to V at (t, x, mu), with the
/// measure integral replaced by the exact empirical average:
///   b . dxV + (1/2) tr(sigma sigma^T dxxV)
///   + (1/N) sum_y [ b(t,y,mu) . dmuV(x,mu)(y)
///                   + (1/2) tr(sigma sigma^T(t,y,mu) dy dmuV(x,mu)(y)) ].
inline double eval_generator(const LyapunovFunctional& V, const ModelSpec& model, double t,
                             std::span<const double> x, const EmpiricalMeasure& mu) {
    require(V.d == model.d, "eval_generator: functional/model dimension mismatch");
    const int d = model.d;
    const int n = model.n;

    std::vector<double> b = eval_drift(model, t, x, mu);
    std::vector<double> sigma = eval_diffusion(model, t, x, mu);
    std::vector<double> a(static_cast<std::size_t>(d) * d);
    detail::outer_product(sigma, d, n, a);

    std::vector<double> grad(d), hess(static_cast<std::size_t>(d) * d);
    V.dx(x, mu, grad);
    V.dxx(x, mu, hess);

    double g = 0.0;
    for (int k = 0; k < d; ++k) g += b[k] * grad[k];
    g += 0.5 * detail::trace_product(a, hess, d);

    std::vector<double> by(d), sigy(static_cast<std::size_t>(d) * n),
        ay(static_cast<std::size_t>(d) * d), dmu(d), dydmu(static_cast<std::size_t>(d) * d);
    double integral = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
        std::span<const double> y = mu.point(i);
        model.drift.eval(t, y, mu, by);
        model.diffusion.eval(t, y, mu, sigy);
        detail::outer_product(sigy, d, n, ay);
        V.dmu(x, mu, y, dmu);
        V.dy_dmu(x, mu, y, dydmu);
        double term = 0.0;
        for (int k = 0; k < d; ++k) term += by[k] * dmu[k];
        term += 0.5 * detail::trace_product(ay, dydmu, d);
        integral += term;
    }
    g += integral / mu.size();
    if (!std::isfinite(g))
        throw contract_error("eval_generator: non-finite generator value");
    return g;
}

inline double eval_generator_1d(const LyapunovFunctional& V, const ModelSpec& model, double t,
                                double x, const EmpiricalMeasure& mu) {
    return eval_generator(V, model, t, std::span<const double>(&x, 1), mu);
}

enum class DriftConditionMode { GrowthBound, CoerciveBound };

/// GrowthBound checks (LV)(t,x,mu) <= rate * V(x,mu); CoerciveBound checks
/// (LV)(x,mu) <= -rate. Per-sample slack is 1e-7 * (1 + |V|).
inline ConditionReport check_drift_condition(const LyapunovFunctional& V, const ModelSpec& model,
                                             double rate,
                                             std::span<const ConditionSample> samples,
                                             DriftConditionMode mode) {
    const char* name =
        mode == DriftConditionMode::GrowthBound ? "drift-growth-bound" : "drift-coercive-bound";
    return detail::run_condition(name, samples, [&](const ConditionSample& s) {
        double lv = eval_generator(V, model, s.t, s.x, s.mu);
        double v = V.value(s.x, s.mu);
        double slack = 1e-7 * (1.0 + std::abs(v));
        double rhs = mode == DriftConditionMode::GrowthBound ? rate * v : -rate;
        return lv - rhs - slack;
    });
}

/// Coefficient growth bound |b|^{2l} + |sigma|^{2l} <= K (1 + V).
inline ConditionReport check_growth_condition(const LyapunovFunctional& V, const ModelSpec& model,
                                              std::span<const ConditionSample> samples) {
    require(V.growth_K > 0.0 && V.growth_ell > 1.0,
            "check_growth_condition: growth constants (ell > 1, K > 0) must be set");
    return detail::run_condition("coefficient-growth", samples, [&](const ConditionSample& s) {
        std::vector<double> b = eval_drift(model, s.t, s.x, s.mu);
        std::vector<double> sigma = eval_diffusion(model, s.t, s.x, s.mu);
        double bn = detail::frobenius_norm(b);
        double sn = detail::frobenius_norm(sigma);
        double lhs = std::pow(bn, 2.0 * V.growth_ell) + std::pow(sn, 2.0 * V.growth_ell);
        double v = V.value(s.x, s.mu);
        double slack = 1e-7 * (1.0 + std::abs(v));
        return lhs - V.growth_K * (1.0 + v) - slack;
    });
}

/// Checks the moment bound along a recorded trajectory:
///   (1/N) sum_i V(x_i(t), mu_t)  <=  e^{rate t} * (initial average) * (1 + mc_slack),
/// with mc_slack = 3 * (sample sd of V at the snapshot) / sqrt(N).
inline ConditionReport verify_energy_estimate(const Trajectory& traj,
                                              const LyapunovFunctional& V, double rate) {
    require(!traj.snapshots.empty(), "verify_energy_estimate: trajectory has no snapshots");
    ConditionReport report;
    report.condition = "energy-estimate";
    report.n_samples = static_cast<int>(traj.snapshots.size());

    double initial_avg = 0.0;
    for (std::size_t snap = 0; snap < traj.snapshots.size(); ++snap) {
        EmpiricalMeasure mu = traj.measure_at(snap);
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < traj.N; ++i) {
            double v = V.value(mu.point(i), mu);
            sum += v;
            sum_sq += v * v;
        }
        double avg = sum / traj.N;
        double var = std::max(0.0, sum_sq / traj.N - avg * avg);
        double mc_slack = 3.0 * std::sqrt(var / traj.N);
        if (snap == 0) initial_avg = avg;
        double t = traj.time_at(snap);
        double bound = std::exp(rate * t) * initial_avg * (1.0 + mc_slack) + mc_slack;
        double violation = avg - bound;
        if (violation > report.max_violation) {
            report.max_violation = violation;
            report.worst.t = t;
            report.worst.x = {avg};
            report.worst.mu_mean = mu.mean(0);
            report.worst.mu_second_moment = mu.second_moment(0);
        }
    }
    report.passed = report.max_violation <= report.slack;
    return report;
}

struct MonotoneSamplePair {
    std::vector<double> x;
    std::vector<double> y;
    EmpiricalMeasure mu;
    EmpiricalMeasure nu;
};

/// Checks the one-sided Lipschitz pair of inequalities at time 0:
///   <x - y, b(x,mu) - b(y,nu)>  <=  -L1 |x-y|^2 + L2 |x-y| W2(mu, nu)
///   |sigma(x,mu) - sigma(y,nu)| <=  L (|x-y| + W2(mu, nu))
/// with the exact assignment W2 on each pair.
inline ConditionReport check_monotone_condition(const ModelSpec& model,
                                                const MonotonicityConstants& constants,
                                                std::span<const MonotoneSamplePair> pairs) {
    require(!pairs.empty(), "check_monotone_condition: sample set must be non-empty");
    ConditionReport report;
    report.condition = "monotone-condition";
    report.n_samples = static_cast<int>(pairs.size());
    for (const auto& pr : pairs) {
        double w2 = wasserstein_assignment(pr.mu, pr.nu, 2);
        std::vector<double> bx = eval_drift(model, 0.0, pr.x, pr.mu);
        std::vector<double> by = eval_drift(model, 0.0, pr.y, pr.nu);
        std::vector<double> sx = eval_diffusion(model, 0.0, pr.x, pr.mu);
        std::vector<double> sy = eval_diffusion(model, 0.0, pr.y, pr.nu);
        double diff2 = 0.0, inner = 0.0;
        for (std::size_t k = 0; k < pr.x.size(); ++k) {
            double dk = pr.x[k] - pr.y[k];
            diff2 += dk * dk;
            inner += dk * (bx[k] - by[k]);
        }
        double diff = std::sqrt(diff2);
        double sig_diff = 0.0;
        for (std::size_t k = 0; k < sx.size(); ++k) {
            double dk = sx[k] - sy[k];
            sig_diff += dk * dk;
        }
        sig_diff = std::sqrt(sig_diff);
        double slack = 1e-7 * (1.0 + diff2 + w2 * w2);
        double drift_violation =
            inner - (-constants.L1 * diff2 + constants.L2 * diff * w2) - slack;
        double sigma_violation = sig_diff - constants.L * (diff + w2) - slack;
        double v = std::max(drift_violation, sigma_violation);
        if (v > report.max_violation) {
            report.max_violation = v;
            report.worst.t = 0.0;
            report.worst.x = pr.x;
            report.worst.mu_mean = pr.mu.mean(0);
            report.worst.mu_second_moment = pr.mu.second_moment(0);
        }
    }
    report.passed = report.max_violation <= report.slack;
    return report;
}

/// Samples V on shells |x| = R for increasing R and reports the minimum per
/// shell; the coercivity hypothesis can only be observed as a trend.
inline std::vector<std::pair<double, double>> coercivity_trend(const LyapunovFunctional& V,
                                                               const EmpiricalMeasure& mu,
                                                               std::span<const double> radii) {
    require(V.d == 1, "coercivity_trend: implemented for d = 1");
    std::vector<std::pair<double, double>> trend;
    for (double r : radii) {
        double xp = r, xm = -r;
        double lo = std::min(V.value(std::span<const double>(&xp, 1), mu),
                             V.value(std::span<const double>(&xm, 1), mu));
        trend.emplace_back(r, lo);
    }
    return trend;
}

}  // namespace mvlab
