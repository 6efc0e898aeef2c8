#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mvlab/core.hpp"
#include "mvlab/model.hpp"
#include "mvlab/noise.hpp"
#include "mvlab/particle.hpp"
#include "mvlab/wasserstein.hpp"

namespace mvlab {

struct ExperimentConfig {
    std::string experiment = "counterexample";
    std::string model = "example1";
    std::vector<double> params;       // family parameter values
    double limit_param = 1.0;
    IntegratorConfig integrator;
    std::uint64_t seed = 1;
    int replicates = 10;
    InitialSpec init = InitialSpec::gaussian(0.0, 1.0);
    std::vector<double> distance_times;  // empty -> terminal time only
    // counterexample knobs
    double eps = 0.5;
    std::vector<long long> k_list = {10, 100, 1000};
    // invariant-measure knobs
    double burn_in = 5.0;
    double checkpoint_gap = 1.0;
    double stationarity_tol = 0.02;
    double max_time = 30.0;
    // Picard knobs
    int picard_max_iter = 8;
    double picard_tol = 0.02;
};

struct ResultRow {
    std::string experiment;
    double param = 0.0;  // family parameter, k, or iteration index
    double time = 0.0;
    std::string statistic;
    double value = 0.0;
    double mc_err = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    bool flagged = false;  // blow-up / non-stationary / non-converged cells present
};

namespace detail {

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

inline MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd r;
    if (xs.empty()) return r;
    for (double x : xs) r.mean += x;
    r.mean /= xs.size();
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - r.mean) * (x - r.mean);
        r.sd = std::sqrt(acc / (xs.size() - 1));
    }
    return r;
}

inline std::size_t snapshot_index_at(const std::vector<double>& times, double target) {
    std::size_t best = 0;
    double best_gap = std::abs(times[0] - target);
    for (std::size_t i = 1; i < times.size(); ++i) {
        double g = std::abs(times[i] - target);
        if (g < best_gap) {
            best_gap = g;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

/// Synchronous-coupling study of parameter dependence: for each family
/// parameter, couples make(param) against make(limit_param) under shared
/// noise and shared initial states, and reports per-time W2, the terminal
/// path-sup gap, and the terminal gap mean square, each averaged over
/// replicates. The param == limit_param control row is always emitted.
inline ExperimentResult run_solution_dependence(const ExperimentConfig& cfg) {
    require(!cfg.params.empty(), "run_solution_dependence: parameter list must be non-empty");
    require(cfg.replicates >= 1, "run_solution_dependence: replicates must be at least 1");
    ModelFamily family = builtin_family(cfg.model, cfg.limit_param);

    std::vector<double> params = cfg.params;
    if (std::find(params.begin(), params.end(), cfg.limit_param) == params.end())
        params.push_back(cfg.limit_param);
    std::vector<double> times = cfg.distance_times;
    if (times.empty()) times.push_back(cfg.integrator.T);

    ExperimentResult result;
    ModelSpec limit_model = family.make(cfg.limit_param);

    for (double param : params) {
        ModelSpec model = family.make(param);
        std::vector<std::vector<double>> w2(times.size());
        std::vector<double> gaps, gap_sq;
        bool blew_up = false;
        for (int rep = 0; rep < cfg.replicates; ++rep) {
            BrownianSource src(cfg.seed, model.n, cfg.integrator.dt, "rep" + std::to_string(rep));
            std::vector<double> init =
                sample_initial_states(cfg.init, cfg.integrator.N, model.d, src);
            try {
                CoupledTrajectory traj =
                    simulate_coupled(model, limit_model, init, init, cfg.integrator, src);
                for (std::size_t ti = 0; ti < times.size(); ++ti) {
                    std::size_t snap = detail::snapshot_index_at(traj.times, times[ti]);
                    w2[ti].push_back(wasserstein(traj.measure_a(snap), traj.measure_b(snap), 2));
                }
                gaps.push_back(traj.path_gap());
                gap_sq.push_back(traj.terminal_gap_mean_sq());
            } catch (const blowup_error&) {
                blew_up = true;
            }
        }
        if (blew_up || gaps.empty()) {
            result.flagged = true;
            result.rows.push_back({cfg.experiment, param, cfg.integrator.T, "blowup", 1.0, 0.0});
            if (gaps.empty()) continue;
        }
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            auto ms = detail::mean_sd(w2[ti]);
            result.rows.push_back({cfg.experiment, param, times[ti], "w2", ms.mean, ms.sd});
        }
        auto gm = detail::mean_sd(gaps);
        result.rows.push_back(
            {cfg.experiment, param, cfg.integrator.T, "path_sup_gap", gm.mean, gm.sd});
        auto sm = detail::mean_sd(gap_sq);
        result.rows.push_back(
            {cfg.experiment, param, cfg.integrator.T, "gap_mean_sq", sm.mean, sm.sd});
    }
    return result;
}

/// Invariant-measure dependence: estimates the long-run measure per family
/// parameter (matched seeds across parameters) and reports W2 to the
/// limit-parameter estimate plus low-order moments.
inline ExperimentResult run_invariant_dependence(const ExperimentConfig& cfg) {
    require(!cfg.params.empty(), "run_invariant_dependence: parameter list must be non-empty");
    require(cfg.replicates >= 1, "run_invariant_dependence: replicates must be at least 1");
    ModelFamily family = builtin_family(cfg.model, cfg.limit_param);

    std::vector<double> params = cfg.params;
    if (std::find(params.begin(), params.end(), cfg.limit_param) == params.end())
        params.push_back(cfg.limit_param);

    ExperimentResult result;
    struct Cell {
        std::vector<double> states;
        bool stationary = false;
        bool ok = false;
    };

    auto estimate = [&](double param, int rep) {
        Cell cell;
        ModelSpec model = family.make(param);
        BrownianSource src(cfg.seed, model.n, cfg.integrator.dt, "rep" + std::to_string(rep));
        std::vector<double> init = sample_initial_states(cfg.init, cfg.integrator.N, model.d, src);
        try {
            InvariantMeasureEstimate est = estimate_invariant_measure(
                model, std::move(init), cfg.integrator, cfg.burn_in, cfg.checkpoint_gap,
                cfg.stationarity_tol, cfg.max_time, src);
            cell.states = std::move(est.final_states);
            cell.stationary = est.stationary;
            cell.ok = true;
        } catch (const blowup_error&) {
        }
        return cell;
    };

    std::vector<Cell> limit_cells;
    for (int rep = 0; rep < cfg.replicates; ++rep)
        limit_cells.push_back(estimate(cfg.limit_param, rep));

    const int d = family.make(cfg.limit_param).d;
    for (double param : params) {
        std::vector<double> w2s, means, seconds;
        bool all_stationary = true, any_failed = false;
        for (int rep = 0; rep < cfg.replicates; ++rep) {
            Cell cell = (param == cfg.limit_param) ? limit_cells[rep] : estimate(param, rep);
            if (!cell.ok || !limit_cells[rep].ok) {
                any_failed = true;
                continue;
            }
            all_stationary = all_stationary && cell.stationary;
            EmpiricalMeasure mu(cell.states, cfg.integrator.N, d);
            EmpiricalMeasure mu_limit(limit_cells[rep].states, cfg.integrator.N, d);
            w2s.push_back(wasserstein(mu, mu_limit, 2));
            means.push_back(mu.mean(0));
            seconds.push_back(mu.second_moment(0));
        }
        if (any_failed) {
            result.flagged = true;
            result.rows.push_back({cfg.experiment, param, 0.0, "blowup", 1.0, 0.0});
        }
        if (w2s.empty()) continue;
        if (!all_stationary) result.flagged = true;
        auto wm = detail::mean_sd(w2s);
        result.rows.push_back({cfg.experiment, param, 0.0, "w2_to_limit", wm.mean, wm.sd});
        auto mm = detail::mean_sd(means);
        result.rows.push_back({cfg.experiment, param, 0.0, "mean", mm.mean, mm.sd});
        auto sm = detail::mean_sd(seconds);
        result.rows.push_back({cfg.experiment, param, 0.0, "second_moment", sm.mean, sm.sd});
        result.rows.push_back(
            {cfg.experiment, param, 0.0, "stationary", all_stationary ? 1.0 : 0.0, 0.0});
    }
    return result;
}

/// The convergence-in-probability counterexample: initial values
/// X_{k,0} = k 1{U_i <= 1/k} versus X_0 = 0 with one shared uniform U per
/// particle across all k, coupled under shared noise. The initial gap
/// probability 1/k vanishes while the terminal gap probability does not.
inline ExperimentResult run_counterexample(const ExperimentConfig& cfg) {
    require(!cfg.k_list.empty(), "run_counterexample: k list must be non-empty");
    require(cfg.eps > 0.0, "run_counterexample: eps must be positive");
    ModelSpec model = builtin_model("counterexample");

    const int N = cfg.integrator.N;
    BrownianSource src(cfg.seed, model.n, cfg.integrator.dt, "run");
    BrownianSource u_src = src.split("init-u");
    std::vector<double> u(N);
    for (int i = 0; i < N; ++i) u[i] = u_src.uniform01(static_cast<std::uint64_t>(i), 0);

    ExperimentResult result;
    for (long long k : cfg.k_list) {
        require(k >= 1, "run_counterexample: k values must be positive");
        std::vector<double> init_a(N, 0.0), init_b(N, 0.0);
        long long atoms = 0;
        for (int i = 0; i < N; ++i)
            if (u[i] <= 1.0 / static_cast<double>(k)) {
                init_a[i] = static_cast<double>(k);
                ++atoms;
            }

        double p_initial = static_cast<double>(atoms) / N;
        double e_initial = static_cast<double>(atoms) * static_cast<double>(k) / N;

        CoupledTrajectory traj =
            simulate_coupled(model, model, init_a, init_b, cfg.integrator, src);
        const auto& a = traj.states_a.back();
        const auto& b = traj.states_b.back();
        double p_terminal = convergence_in_probability_stat(a, b, cfg.eps);

        double offatom_gap = 0.0;
        long long offatom_count = 0;
        for (int i = 0; i < N; ++i) {
            if (init_a[i] != 0.0) continue;
            offatom_gap += a[i] - b[i];
            ++offatom_count;
        }
        if (offatom_count > 0) offatom_gap /= static_cast<double>(offatom_count);

        double param = static_cast<double>(k);
        double T = cfg.integrator.T;
        result.rows.push_back({cfg.experiment, param, 0.0, "p_initial_gap", p_initial, 0.0});
        result.rows.push_back({cfg.experiment, param, 0.0, "e_initial_gap", e_initial, 0.0});
        result.rows.push_back({cfg.experiment, param, 0.0, "atom_fraction", p_initial, 0.0});
        result.rows.push_back({cfg.experiment, param, T, "p_terminal_gap", p_terminal, 0.0});
        result.rows.push_back({cfg.experiment, param, T, "offatom_gap_mean", offatom_gap, 0.0});
        result.rows.push_back(
            {cfg.experiment, param, T, "path_sup_gap", traj.path_gap(), 0.0});
    }
    return result;
}

/// Picard-iteration diagnostics: per-iteration sup-over-times W2 sequence,
/// per-iteration terminal mean, and the terminal W2 between the converged
/// Picard trajectory and the direct simulation under the same noise.
inline ExperimentResult run_picard_convergence(const ExperimentConfig& cfg) {
    ModelSpec model = builtin_model(
        cfg.model, cfg.model == "counterexample"
                       ? std::map<std::string, double>{}
                       : std::map<std::string, double>{{"lambda", cfg.limit_param}});
    BrownianSource src(cfg.seed, model.n, cfg.integrator.dt, "run");
    std::vector<double> init = sample_initial_states(cfg.init, cfg.integrator.N, model.d, src);

    PicardResult picard =
        picard_solve(model, init, cfg.integrator, src, cfg.picard_max_iter, cfg.picard_tol);

    ExperimentResult result;
    double T = cfg.integrator.T;
    for (int n = 0; n < picard.iterations; ++n) {
        double iter = static_cast<double>(n + 1);
        result.rows.push_back(
            {cfg.experiment, iter, T, "picard_w2", picard.distances[n], 0.0});
        result.rows.push_back(
            {cfg.experiment, iter, T, "terminal_mean", picard.terminal_means[n], 0.0});
    }

    Trajectory direct = simulate(model, init, cfg.integrator, src);
    std::size_t last = direct.snapshots.size() - 1;
    double w2_direct =
        wasserstein(picard.trajectory.measure_at(last), direct.measure_at(last), 2);
    result.rows.push_back({cfg.experiment, 0.0, T, "w2_to_direct", w2_direct, 0.0});
    result.rows.push_back(
        {cfg.experiment, 0.0, T, "converged", picard.converged ? 1.0 : 0.0, 0.0});
    if (!picard.converged) result.flagged = true;
    return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "solution_dependence") return run_solution_dependence(cfg);
    if (cfg.experiment == "invariant_dependence") return run_invariant_dependence(cfg);
    if (cfg.experiment == "counterexample") return run_counterexample(cfg);
    if (cfg.experiment == "picard") return run_picard_convergence(cfg);
    throw contract_error("run_experiment: unknown experiment '" + cfg.experiment + "'");
}

}  // namespace mvlab
