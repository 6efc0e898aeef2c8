// Command-line front end: simulate | experiment | check | distance | oracle.
//
// Exit codes: 0 success, 1 contract violation, 2 blow-up or non-convergence
// flags present, 64 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvlab/check_suites.hpp"
#include "mvlab/mvlab.hpp"
#include "mvlab/oracles.hpp"

namespace fs = std::filesystem;

namespace {

std::string resolve_output_dir(const std::string& dir) {
    if (fs::path(dir).is_absolute()) return dir;
    if (const char* root = std::getenv("MVLAB_OUT_ROOT")) return (fs::path(root) / dir).string();
    return dir;
}

mvlab::RunManifest start_manifest(const mvlab::ResolvedConfig& rc) {
    mvlab::RunManifest m;
    m.seed = rc.experiment.seed;
    m.config_hash = mvlab::hex64(mvlab::config_hash(rc.canonical));
    m.started_at = mvlab::timestamp_utc();
    m.resolved_config = rc.canonical;
    return m;
}

int cmd_simulate(const std::string& config_path, int workers_override, bool force) {
    mvlab::ResolvedConfig rc = mvlab::parse_config(config_path);
    if (workers_override > 0) rc.experiment.integrator.workers = workers_override;
    if (force) rc.outputs.force = true;
    rc.outputs.dir = resolve_output_dir(rc.outputs.dir);

    mvlab::RunManifest manifest = start_manifest(rc);
    mvlab::prepare_output_dir(rc.outputs);

    auto& cfg = rc.experiment;
    mvlab::ModelSpec model = mvlab::builtin_model(
        cfg.model, cfg.model == "counterexample"
                       ? std::map<std::string, double>{}
                       : std::map<std::string, double>{{"lambda", cfg.limit_param}});
    mvlab::BrownianSource src(cfg.seed, model.n, cfg.integrator.dt, "run");
    std::vector<double> init =
        mvlab::sample_initial_states(cfg.init, cfg.integrator.N, model.d, src);
    mvlab::Trajectory traj = mvlab::simulate(model, std::move(init), cfg.integrator, src);

    mvlab::write_summary_csv((fs::path(rc.outputs.dir) / "summary.csv").string(), traj);
    if (rc.outputs.snapshots)
        mvlab::write_snapshot_csv((fs::path(rc.outputs.dir) / "snapshots.csv").string(), traj);
    manifest.finished_at = mvlab::timestamp_utc();
    mvlab::write_manifest(rc.outputs, manifest);
    std::cout << "wrote " << rc.outputs.dir << "/summary.csv (" << traj.snapshots.size()
              << " snapshots)\n";
    return 0;
}

int cmd_experiment(const std::string& config_path, int workers_override, bool force) {
    mvlab::ResolvedConfig rc = mvlab::parse_config(config_path);
    if (workers_override > 0) rc.experiment.integrator.workers = workers_override;
    if (force) rc.outputs.force = true;
    rc.outputs.dir = resolve_output_dir(rc.outputs.dir);

    mvlab::RunManifest manifest = start_manifest(rc);
    mvlab::prepare_output_dir(rc.outputs);

    mvlab::ExperimentResult result = mvlab::run_experiment(rc.experiment);
    mvlab::write_result_csv((fs::path(rc.outputs.dir) / "result.csv").string(), result.rows);
    manifest.finished_at = mvlab::timestamp_utc();
    mvlab::write_manifest(rc.outputs, manifest);
    std::cout << "wrote " << rc.outputs.dir << "/result.csv (" << result.rows.size()
              << " rows)\n";
    return result.flagged ? 2 : 0;
}

int cmd_check(const std::string& suite, std::uint64_t seed, double lambda,
              const std::string& out_path) {
    std::vector<std::string> suites;
    if (suite == "all")
        suites = mvlab::check_suite_names();
    else
        suites.push_back(suite);

    mvlab::json out = mvlab::json::array();
    bool all_ok = true;
    for (const auto& name : suites) {
        mvlab::SuiteResult sr = mvlab::run_check_suite(name, seed, lambda);
        for (const auto& check : sr.checks) {
            const auto& r = check.report;
            out.push_back({{"suite", name},
                           {"condition", r.condition},
                           {"n_samples", r.n_samples},
                           {"max_violation", r.max_violation},
                           {"passed", r.passed},
                           {"expected_pass", check.expected_pass},
                           {"worst", {{"t", r.worst.t},
                                      {"x", r.worst.x},
                                      {"mu_mean", r.worst.mu_mean},
                                      {"mu_second_moment", r.worst.mu_second_moment}}}});
        }
        bool ok = sr.ok();
        all_ok = all_ok && ok;
        std::cout << name << ": " << (ok ? "ok" : "FAILED") << " (" << sr.checks.size()
                  << " checks)\n";
    }
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << out.dump(2) << "\n";
    } else {
        std::cout << out.dump(2) << "\n";
    }
    return all_ok ? 0 : 2;
}

int cmd_distance(const std::string& path_a, const std::string& path_b, int p,
                 const std::string& method, int n_projections, std::uint64_t seed) {
    mvlab::EmpiricalMeasure mu = mvlab::read_samples_csv(path_a);
    mvlab::EmpiricalMeasure nu = mvlab::read_samples_csv(path_b);
    double value = 0.0;
    if (method == "auto") {
        value = mvlab::wasserstein(mu, nu, p);
    } else if (method == "1d") {
        value = mvlab::wasserstein_1d(mu, nu, p);
    } else if (method == "assignment") {
        value = mvlab::wasserstein_assignment(mu, nu, p);
    } else if (method == "sliced") {
        mvlab::BrownianSource src(seed, 1, 1.0, "distance");
        value = mvlab::sliced_wasserstein(mu, nu, p, n_projections, src);
    } else {
        throw mvlab::contract_error("distance: unknown method '" + method + "'");
    }
    std::cout << mvlab::format_double(value) << "\n";
    return 0;
}

int cmd_oracle(const std::string& name, double t, double lambda, double m0, double m2_0,
               long long k, long long n_particles, int n_terms) {
    using namespace mvlab::oracles;
    if (name == "counterexample-closed-form") {
        std::cout << "t,gap_factor\n"
                  << mvlab::format_double(t) << ","
                  << mvlab::format_double(counterexample_gap_factor(t)) << "\n";
        return 0;
    }
    if (name == "moment-ode-example1") {
        std::cout << "t,m2\n";
        auto rhs = example1_m2_rhs(lambda);
        for (double tt : {0.1 * t, 0.25 * t, 0.5 * t, t}) {
            double m2 = rk4_integrate(rhs, m2_0, 0.0, tt, 4096);
            std::cout << mvlab::format_double(tt) << "," << mvlab::format_double(m2) << "\n";
        }
        return 0;
    }
    if (name == "moment-ode-example3") {
        std::cout << "t,mean,m2\n";
        for (double tt : {0.25 * t, 0.5 * t, t}) {
            double mean = m0 * std::exp((lambda - 5.0) * tt);
            double m2 = example3_second_moment(lambda, m0, m2_0, tt, 4096);
            std::cout << mvlab::format_double(tt) << "," << mvlab::format_double(mean) << ","
                      << mvlab::format_double(m2) << "\n";
        }
        return 0;
    }
    if (name == "counterexample-initial-sd") {
        std::cout << "k,N,sd\n"
                  << k << "," << n_particles << ","
                  << mvlab::format_double(counterexample_initial_gap_sd(k, n_particles)) << "\n";
        return 0;
    }
    if (name == "exp-partial-sums") {
        std::cout << "n,partial_sum\n";
        for (int n = 0; n <= n_terms; ++n)
            std::cout << n << "," << mvlab::format_double(exp_partial_sum(n, t)) << "\n";
        return 0;
    }
    throw mvlab::contract_error("oracle: unknown name '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"McKean-Vlasov particle simulation and hypothesis-check laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    int workers = 0;
    bool force = false;

    auto* sim = app.add_subcommand("simulate", "run one model trajectory, write CSV summaries");
    sim->add_option("--config", config_path, "JSON config file")->required();
    sim->add_option("--workers", workers, "override worker count");
    sim->add_flag("--force", force, "overwrite an existing run directory");

    auto* exp = app.add_subcommand("experiment", "run a config-driven study");
    exp->add_option("--config", config_path, "JSON config file")->required();
    exp->add_option("--workers", workers, "override worker count");
    exp->add_flag("--force", force, "overwrite an existing run directory");

    std::string suite = "all", check_out;
    std::uint64_t seed = 1;
    double lambda = -1.0;
    auto* chk = app.add_subcommand("check", "run named hypothesis-check suites");
    chk->add_option("--suite", suite, "suite name, or 'all'");
    chk->add_option("--seed", seed, "sampling seed");
    chk->add_option("--lambda", lambda, "model parameter override");
    chk->add_option("--out", check_out, "write the JSON report here instead of stdout");

    std::string path_a, path_b, method = "auto";
    int p = 2, n_projections = 128;
    auto* dist = app.add_subcommand("distance", "Wasserstein distance between two sample CSVs");
    dist->add_option("a", path_a, "first sample CSV")->required();
    dist->add_option("b", path_b, "second sample CSV")->required();
    dist->add_option("--p", p, "order (1 or 2)")->check(CLI::IsMember({1, 2}));
    dist->add_option("--method", method, "auto|1d|assignment|sliced");
    dist->add_option("--projections", n_projections, "sliced projection count");
    dist->add_option("--seed", seed, "sliced direction seed");

    std::string oracle_name;
    double t = 1.0, m0 = 1.0, m2_0 = 0.25;
    long long k = 100, n_particles = 100000;
    int n_terms = 8;
    auto* orc = app.add_subcommand("oracle", "print reference tables from the closed-form oracles");
    orc->add_option("--name", oracle_name,
                    "counterexample-closed-form | moment-ode-example1 | moment-ode-example3 | "
                    "counterexample-initial-sd | exp-partial-sums")
        ->required();
    orc->add_option("--t", t, "time horizon");
    orc->add_option("--lambda", lambda, "model parameter");
    orc->add_option("--m0", m0, "initial mean");
    orc->add_option("--m2", m2_0, "initial second moment");
    orc->add_option("--k", k, "counterexample k");
    orc->add_option("--N", n_particles, "particle count");
    orc->add_option("--terms", n_terms, "series terms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 64;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, workers, force);
        if (exp->parsed()) return cmd_experiment(config_path, workers, force);
        if (chk->parsed()) return cmd_check(suite, seed, lambda, check_out);
        if (dist->parsed()) return cmd_distance(path_a, path_b, p, method, n_projections, seed);
        if (orc->parsed())
            return cmd_oracle(oracle_name, t, lambda < 0 ? 1.0 : lambda, m0, m2_0, k, n_particles,
                              n_terms);
    } catch (const mvlab::blowup_error& e) {
        std::cerr << "blow-up: " << e.what() << "\n";
        return 2;
    } catch (const mvlab::contract_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 64;
}
