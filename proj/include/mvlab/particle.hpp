#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mvlab/core.hpp"
#include "mvlab/empirical_measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/noise.hpp"
#include "mvlab/wasserstein.hpp"

namespace mvlab {

struct IntegratorConfig {
    int N = 10000;
    double dt = 1e-3;
    double T = 1.0;
    int record_every = 10;
    double blowup_threshold = 1e12;
    int workers = 1;
};

inline void validate(const IntegratorConfig& cfg) {
    require(cfg.N >= 1, "IntegratorConfig: N must be at least 1");
    require(cfg.dt > 0.0, "IntegratorConfig: dt must be positive");
    require(cfg.T >= 0.0, "IntegratorConfig: T must be nonnegative");
    require(cfg.record_every >= 1, "IntegratorConfig: record_every must be at least 1");
    require(cfg.blowup_threshold > 0.0, "IntegratorConfig: blowup_threshold must be positive");
    require(cfg.workers >= 1, "IntegratorConfig: workers must be at least 1");
}

struct ParticleEnsemble {
    std::vector<double> states;  // N x d row-major
    double t = 0.0;
    int N = 0;
    int d = 0;

    EmpiricalMeasure as_measure() const { return EmpiricalMeasure(states, N, d); }
};

struct Snapshot {
    double t;
    std::vector<double> states;  // N x d row-major
};

struct Trajectory {
    int N = 0;
    int d = 0;
    std::vector<Snapshot> snapshots;
    // Per-snapshot first and second moments, one entry per dimension.
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> second_moment;

    EmpiricalMeasure measure_at(std::size_t i) const {
        return EmpiricalMeasure(snapshots.at(i).states, N, d);
    }
    double time_at(std::size_t i) const { return snapshots.at(i).t; }
    const Snapshot& final_snapshot() const { return snapshots.back(); }
};

/// Two systems advanced on the same grid with identical increments per
/// (particle, step), plus the per-particle running sup of the gap.
struct CoupledTrajectory {
    int N = 0;
    int d = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> states_a;  // per recorded time, N x d
    std::vector<std::vector<double>> states_b;
    std::vector<double> sup_gap;  // per particle, sup over all steps of |X_A,i - X_B,i|

    EmpiricalMeasure measure_a(std::size_t i) const {
        return EmpiricalMeasure(states_a.at(i), N, d);
    }
    EmpiricalMeasure measure_b(std::size_t i) const {
        return EmpiricalMeasure(states_b.at(i), N, d);
    }
    /// ((1/N) sum_i sup_t |X_A,i - X_B,i|^2)^{1/2}
    double path_gap() const { return path_sup_gap(sup_gap); }
    double terminal_gap_mean_sq() const {
        double acc = 0.0;
        const auto& a = states_a.back();
        const auto& b = states_b.back();
        for (std::size_t i = 0; i < a.size(); ++i) {
            double g = a[i] - b[i];
            acc += g * g;
        }
        return acc / N;
    }
};

namespace detail {

template <class F>
void parallel_particles(int n, int workers, F&& body) {
    if (workers <= 1 || n < 2 * workers) {
        body(0, n);
        return;
    }
    int chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    std::mutex err_mu;
    std::exception_ptr first_error;
    for (int w = 0; w < workers; ++w) {
        int lo = w * chunk;
        int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&, lo, hi] {
            try {
                body(lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct StepWorkspace {
    std::vector<double> drift;
    std::vector<double> diffusion;
    std::vector<double> dw;
};

// One Euler-Maruyama step, measure frozen at step start. `apply_to` may alias
// `states` (in-place) or be a second system sharing the increments.
// Sets *bad_particle to the smallest violating index on blow-up, else -1.
inline void em_step_system(std::vector<double>& states, const ModelSpec& model,
                           const EmpiricalMeasure& mu, double t, double dt,
                           const BrownianSource& src, std::int64_t step, int N, int workers,
                           double blowup_threshold, std::int64_t* bad_particle) {
    const int d = model.d;
    const int n = model.n;
    std::vector<char> violated(static_cast<std::size_t>(N), 0);
    parallel_particles(N, workers, [&](int lo, int hi) {
        StepWorkspace ws;
        ws.drift.resize(d);
        ws.diffusion.resize(static_cast<std::size_t>(d) * n);
        ws.dw.resize(n);
        std::vector<double> x(d);
        for (int i = lo; i < hi; ++i) {
            double* xi = states.data() + static_cast<std::size_t>(i) * d;
            std::copy(xi, xi + d, x.begin());
            model.drift.eval(t, x, mu, ws.drift);
            model.diffusion.eval(t, x, mu, ws.diffusion);
            src.fill_increment(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(step),
                               ws.dw);
            for (int r = 0; r < d; ++r) {
                double incr = ws.drift[r] * dt;
                for (int c = 0; c < n; ++c)
                    incr += ws.diffusion[static_cast<std::size_t>(r) * n + c] * ws.dw[c];
                double v = xi[r] + incr;
                if (!std::isfinite(v) || std::abs(v) > blowup_threshold) violated[i] = 1;
                xi[r] = v;
            }
        }
    });
    *bad_particle = -1;
    for (int i = 0; i < N; ++i) {
        if (violated[i]) {
            *bad_particle = i;
            break;
        }
    }
}

[[noreturn]] inline void throw_blowup(const std::string& what, double t, std::int64_t step,
                                      std::int64_t particle) {
    std::ostringstream msg;
    msg << what << ": particle " << particle << " left the finite regime at step " << step
        << " (t=" << t << ")";
    throw blowup_error(msg.str(), t, step, particle);
}

inline std::int64_t step_count(double T, double dt) {
    return static_cast<std::int64_t>(std::ceil(T / dt - 1e-9));
}

}  // namespace detail

/// One explicit Euler-Maruyama step with the empirical measure frozen at step
/// start: x_i <- x_i + b(t, x_i, mu) dt + sigma(t, x_i, mu) dW_i.
inline ParticleEnsemble em_step(const ParticleEnsemble& ens, const ModelSpec& model, double dt,
                                const BrownianSource& src, std::int64_t step,
                                double blowup_threshold = 1e12, int workers = 1) {
    require(ens.d == model.d, "em_step: ensemble/model dimension mismatch");
    require(src.n() == model.n, "em_step: noise source dimension mismatch");
    require(dt > 0.0, "em_step: dt must be positive");
    ParticleEnsemble out = ens;
    EmpiricalMeasure mu = ens.as_measure();
    std::int64_t bad = -1;
    detail::em_step_system(out.states, model, mu, ens.t, dt, src, step, ens.N, workers,
                           blowup_threshold, &bad);
    if (bad >= 0) detail::throw_blowup("em_step", ens.t, step, bad);
    out.t = ens.t + dt;
    return out;
}

/// Initial-state samplers, all keyed off split_stream(src, "init").
struct InitialSpec {
    enum class Kind { Constant, Gaussian, Uniform, Matrix } kind = Kind::Gaussian;
    double value = 0.0;     // Constant
    double mean = 0.0;      // Gaussian
    double variance = 1.0;  // Gaussian
    double lo = 0.0;        // Uniform
    double hi = 1.0;        // Uniform
    std::vector<double> matrix;  // Matrix, N x d row-major

    static InitialSpec constant(double v) { return {Kind::Constant, v}; }
    static InitialSpec gaussian(double mean, double variance) {
        InitialSpec s;
        s.kind = Kind::Gaussian;
        s.mean = mean;
        s.variance = variance;
        return s;
    }
    static InitialSpec uniform(double lo, double hi) {
        InitialSpec s;
        s.kind = Kind::Uniform;
        s.lo = lo;
        s.hi = hi;
        return s;
    }
    static InitialSpec explicit_matrix(std::vector<double> m) {
        InitialSpec s;
        s.kind = Kind::Matrix;
        s.matrix = std::move(m);
        return s;
    }
};

inline std::vector<double> sample_initial_states(const InitialSpec& spec, int N, int d,
                                                 const BrownianSource& src) {
    std::vector<double> states(static_cast<std::size_t>(N) * d);
    switch (spec.kind) {
        case InitialSpec::Kind::Constant:
            std::fill(states.begin(), states.end(), spec.value);
            break;
        case InitialSpec::Kind::Gaussian: {
            require(spec.variance >= 0.0, "initial sampler: variance must be nonnegative");
            BrownianSource init = src.split("init").with_n(d).with_dt(1.0);
            double sd = std::sqrt(spec.variance);
            std::vector<double> z(d);
            for (int i = 0; i < N; ++i) {
                init.fill_increment(static_cast<std::uint64_t>(i), 0, z);
                for (int k = 0; k < d; ++k)
                    states[static_cast<std::size_t>(i) * d + k] = spec.mean + sd * z[k];
            }
            break;
        }
        case InitialSpec::Kind::Uniform: {
            require(spec.hi >= spec.lo, "initial sampler: uniform bounds out of order");
            BrownianSource init = src.split("init");
            for (int i = 0; i < N; ++i)
                for (int k = 0; k < d; ++k)
                    states[static_cast<std::size_t>(i) * d + k] =
                        spec.lo + (spec.hi - spec.lo) *
                                      init.uniform01(static_cast<std::uint64_t>(i),
                                                     static_cast<std::uint64_t>(k));
            break;
        }
        case InitialSpec::Kind::Matrix:
            require(spec.matrix.size() == states.size(),
                    "initial sampler: explicit matrix has wrong size");
            states = spec.matrix;
            break;
    }
    return states;
}

/// Runs ceil(T/dt) Euler-Maruyama steps, recording a snapshot (full ensemble
/// plus per-dimension first/second moments) at t=0, every record_every steps,
/// and at the final step.
inline Trajectory simulate(const ModelSpec& model, std::vector<double> initial_states,
                           const IntegratorConfig& cfg, const BrownianSource& src) {
    validate(cfg);
    require(initial_states.size() == static_cast<std::size_t>(cfg.N) * model.d,
            "simulate: initial state matrix has wrong size");
    require(src.n() == model.n, "simulate: noise source dimension mismatch");
    require(all_finite(initial_states.data(), initial_states.size()),
            "simulate: non-finite initial state");

    Trajectory traj;
    traj.N = cfg.N;
    traj.d = model.d;
    std::vector<double> states = std::move(initial_states);

    auto record = [&](double t) {
        EmpiricalMeasure mu(states, cfg.N, model.d);
        std::vector<double> m(model.d), s(model.d);
        for (int k = 0; k < model.d; ++k) {
            m[k] = mu.mean(k);
            s[k] = mu.second_moment(k);
        }
        traj.snapshots.push_back({t, states});
        traj.mean.push_back(std::move(m));
        traj.second_moment.push_back(std::move(s));
    };

    record(0.0);
    std::int64_t steps = detail::step_count(cfg.T, cfg.dt);
    for (std::int64_t k = 0; k < steps; ++k) {
        double t = k * cfg.dt;
        EmpiricalMeasure mu(states, cfg.N, model.d);
        std::int64_t bad = -1;
        detail::em_step_system(states, model, mu, t, cfg.dt, src, k, cfg.N, cfg.workers,
                               cfg.blowup_threshold, &bad);
        if (bad >= 0) detail::throw_blowup("simulate", t, k, bad);
        if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) record((k + 1) * cfg.dt);
    }
    return traj;
}

/// Advances two systems under synchronous coupling: identical initial pairing
/// and identical Gaussian increments per (particle, step).
inline CoupledTrajectory simulate_coupled(const ModelSpec& model_a, const ModelSpec& model_b,
                                          std::vector<double> initial_a,
                                          std::vector<double> initial_b,
                                          const IntegratorConfig& cfg, const BrownianSource& src) {
    validate(cfg);
    require(model_a.d == model_b.d && model_a.n == model_b.n,
            "simulate_coupled: models must share (d, n)");
    require(src.n() == model_a.n, "simulate_coupled: noise source dimension mismatch");
    const int d = model_a.d;
    require(initial_a.size() == static_cast<std::size_t>(cfg.N) * d &&
                initial_b.size() == initial_a.size(),
            "simulate_coupled: initial matrices must both be N x d");

    CoupledTrajectory traj;
    traj.N = cfg.N;
    traj.d = d;
    traj.sup_gap.assign(cfg.N, 0.0);

    std::vector<double> a = std::move(initial_a);
    std::vector<double> b = std::move(initial_b);

    auto update_sup = [&] {
        for (int i = 0; i < cfg.N; ++i) {
            double g2 = 0.0;
            for (int k = 0; k < d; ++k) {
                double g = a[static_cast<std::size_t>(i) * d + k] -
                           b[static_cast<std::size_t>(i) * d + k];
                g2 += g * g;
            }
            traj.sup_gap[i] = std::max(traj.sup_gap[i], std::sqrt(g2));
        }
    };
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.states_a.push_back(a);
        traj.states_b.push_back(b);
    };

    update_sup();
    record(0.0);
    std::int64_t steps = detail::step_count(cfg.T, cfg.dt);
    for (std::int64_t k = 0; k < steps; ++k) {
        double t = k * cfg.dt;
        EmpiricalMeasure mu_a(a, cfg.N, d);
        EmpiricalMeasure mu_b(b, cfg.N, d);
        std::int64_t bad_a = -1, bad_b = -1;
        detail::em_step_system(a, model_a, mu_a, t, cfg.dt, src, k, cfg.N, cfg.workers,
                               cfg.blowup_threshold, &bad_a);
        detail::em_step_system(b, model_b, mu_b, t, cfg.dt, src, k, cfg.N, cfg.workers,
                               cfg.blowup_threshold, &bad_b);
        if (bad_a >= 0) detail::throw_blowup("simulate_coupled[A]", t, k, bad_a);
        if (bad_b >= 0) detail::throw_blowup("simulate_coupled[B]", t, k, bad_b);
        update_sup();
        if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) record((k + 1) * cfg.dt);
    }
    return traj;
}

struct PicardResult {
    Trajectory trajectory;  // last iterate
    std::vector<double> distances;  // sup over recorded times of W2(iter n, iter n-1)
    std::vector<double> terminal_means;  // first-component mean at T, per iterate
    bool converged = false;
    int iterations = 0;
};

/// Picard iteration on the measure flow: iterate n solves the SDE with the
/// recorded empirical flow of iterate n-1 frozen (iterate 0 is the
/// constant-in-time initial ensemble). The same noise source drives every
/// iteration.
inline PicardResult picard_solve(const ModelSpec& model, std::vector<double> initial_states,
                                 const IntegratorConfig& cfg, const BrownianSource& src,
                                 int max_iter, double tol) {
    validate(cfg);
    require(max_iter >= 1, "picard_solve: max_iter must be at least 1");
    require(tol > 0.0, "picard_solve: tol must be positive");
    require(initial_states.size() == static_cast<std::size_t>(cfg.N) * model.d,
            "picard_solve: initial state matrix has wrong size");

    PicardResult result;
    auto flow = std::make_shared<const MeasureFlow>(
        MeasureFlow::constant(EmpiricalMeasure(initial_states, cfg.N, model.d)));

    for (int iter = 1; iter <= max_iter; ++iter) {
        ModelSpec frozen = frozen_flow_model(model, flow);
        Trajectory traj = simulate(frozen, initial_states, cfg, src);

        std::vector<double> times;
        std::vector<EmpiricalMeasure> measures;
        times.reserve(traj.snapshots.size());
        for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
            times.push_back(traj.time_at(i));
            measures.push_back(traj.measure_at(i));
        }
        // Recorded grids start at t=0 where both iterates share the initial
        // ensemble; the distance sup is over the same recorded times.
        double dist = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i)
            dist = std::max(dist, wasserstein(measures[i], flow->at(times[i]), 2));
        result.distances.push_back(dist);
        result.terminal_means.push_back(traj.mean.back()[0]);
        result.trajectory = std::move(traj);
        result.iterations = iter;

        flow = std::make_shared<const MeasureFlow>(MeasureFlow(times, measures));
        if (dist < tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

struct InvariantMeasureEstimate {
    std::vector<double> final_states;
    int N = 0;
    int d = 0;
    std::vector<double> checkpoint_times;
    std::vector<double> checkpoint_distances;  // W2 between consecutive checkpoints
    bool stationary = false;
    double final_time = 0.0;

    EmpiricalMeasure measure() const { return EmpiricalMeasure(final_states, N, d); }
};

/// Long-run estimate of the invariant measure: simulate past burn_in, record
/// checkpoint ensembles every checkpoint_gap, and declare stationarity when
/// the W2 distances among three consecutive checkpoints all fall below
/// stationarity_tol. The returned measure is the last checkpoint ensemble.
inline InvariantMeasureEstimate estimate_invariant_measure(
    const ModelSpec& model, std::vector<double> initial_states, const IntegratorConfig& cfg,
    double burn_in, double checkpoint_gap, double stationarity_tol, double max_time,
    const BrownianSource& src) {
    validate(cfg);
    require(checkpoint_gap > 0.0, "estimate_invariant_measure: checkpoint_gap must be positive");
    require(burn_in < max_time, "estimate_invariant_measure: burn_in must be below max_time");
    require(stationarity_tol > 0.0, "estimate_invariant_measure: tolerance must be positive");
    require(initial_states.size() == static_cast<std::size_t>(cfg.N) * model.d,
            "estimate_invariant_measure: initial state matrix has wrong size");

    InvariantMeasureEstimate est;
    est.N = cfg.N;
    est.d = model.d;

    std::vector<double> states = std::move(initial_states);
    std::int64_t burn_steps = detail::step_count(burn_in, cfg.dt);
    std::int64_t gap_steps = std::max<std::int64_t>(1, detail::step_count(checkpoint_gap, cfg.dt));
    std::int64_t max_steps = detail::step_count(max_time, cfg.dt);

    EmpiricalMeasure prev_checkpoint(states, cfg.N, model.d);
    bool have_checkpoint = false;

    for (std::int64_t k = 0; k < max_steps; ++k) {
        double t = k * cfg.dt;
        EmpiricalMeasure mu(states, cfg.N, model.d);
        std::int64_t bad = -1;
        detail::em_step_system(states, model, mu, t, cfg.dt, src, k, cfg.N, cfg.workers,
                               cfg.blowup_threshold, &bad);
        if (bad >= 0) detail::throw_blowup("estimate_invariant_measure", t, k, bad);
        est.final_time = (k + 1) * cfg.dt;

        bool at_checkpoint = (k + 1) >= burn_steps && ((k + 1) - burn_steps) % gap_steps == 0;
        if (!at_checkpoint) continue;
        EmpiricalMeasure checkpoint(states, cfg.N, model.d);
        est.checkpoint_times.push_back(est.final_time);
        if (have_checkpoint)
            est.checkpoint_distances.push_back(wasserstein(checkpoint, prev_checkpoint, 2));
        prev_checkpoint = checkpoint;
        have_checkpoint = true;
        std::size_t m = est.checkpoint_distances.size();
        if (m >= 2 && est.checkpoint_distances[m - 1] < stationarity_tol &&
            est.checkpoint_distances[m - 2] < stationarity_tol) {
            est.stationary = true;
            break;
        }
    }
    est.final_states = std::move(states);
    return est;
}

inline double path_sup_gap(const CoupledTrajectory& traj) { return traj.path_gap(); }

}  // namespace mvlab
