#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlab/core.hpp"
#include "mvlab/experiments.hpp"
#include "mvlab/particle.hpp"

namespace mvlab {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw contract_error("config: unknown key '" + path + it.key() + "'");
    }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw contract_error("config: bad value at '" + key + "': " + e.what());
    }
}

inline InitialSpec parse_initial(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, {"kind", "value", "mean", "variance", "lo", "hi"}, path);
    std::string kind = get_or<std::string>(obj, "kind", "gaussian");
    if (kind == "constant") return InitialSpec::constant(get_or(obj, "value", 0.0));
    if (kind == "gaussian")
        return InitialSpec::gaussian(get_or(obj, "mean", 0.0), get_or(obj, "variance", 1.0));
    if (kind == "uniform")
        return InitialSpec::uniform(get_or(obj, "lo", 0.0), get_or(obj, "hi", 1.0));
    throw contract_error("config: unknown initial-law kind '" + kind + "' at '" + path + "kind'");
}

inline IntegratorConfig parse_integrator(const json& obj, const std::string& path,
                                         const IntegratorConfig& defaults) {
    reject_unknown_keys(obj, {"N", "dt", "T", "record_every", "blowup_threshold", "workers"},
                        path);
    IntegratorConfig cfg = defaults;
    cfg.N = get_or(obj, "N", cfg.N);
    cfg.dt = get_or(obj, "dt", cfg.dt);
    cfg.T = get_or(obj, "T", cfg.T);
    cfg.record_every = get_or(obj, "record_every", cfg.record_every);
    cfg.blowup_threshold = get_or(obj, "blowup_threshold", cfg.blowup_threshold);
    cfg.workers = get_or(obj, "workers", cfg.workers);
    validate(cfg);
    return cfg;
}

}  // namespace detail

struct OutputSpec {
    std::string dir = "out";
    bool snapshots = false;
    bool force = false;
};

struct ResolvedConfig {
    ExperimentConfig experiment;
    OutputSpec outputs;
    json canonical;  // fully resolved config with defaults applied
};

/// Hash of the canonicalized (key-sorted) config; stable under key reordering
/// in the input file.
inline std::uint64_t config_hash(const json& canonical) { return fnv1a64(canonical.dump()); }

/// Parses and fully resolves an experiment config. Unknown keys are rejected
/// with their key path; missing keys take the documented defaults
/// (N = 10^4, dt = 10^-3, T = 1, eps = 0.5, k_list = [10, 100, 1000]).
inline ResolvedConfig resolve_config(const json& root) {
    detail::reject_unknown_keys(
        root,
        {"experiment", "seed", "model", "family", "integrator", "replicates", "init",
         "distance_times", "eps", "k_list", "burn_in", "checkpoint_gap", "stationarity_tol",
         "max_time", "picard_max_iter", "picard_tol", "outputs"},
        "");
    ResolvedConfig rc;
    ExperimentConfig& cfg = rc.experiment;
    cfg.experiment = detail::get_or<std::string>(root, "experiment", cfg.experiment);
    cfg.seed = detail::get_or<std::uint64_t>(root, "seed", cfg.seed);
    cfg.model = detail::get_or<std::string>(root, "model", cfg.model);
    if (root.contains("family")) {
        const json& fam = root.at("family");
        detail::reject_unknown_keys(fam, {"params", "limit_param"}, "family.");
        cfg.params = detail::get_or(fam, "params", cfg.params);
        cfg.limit_param = detail::get_or(fam, "limit_param", cfg.limit_param);
    }
    if (root.contains("integrator"))
        cfg.integrator = detail::parse_integrator(root.at("integrator"), "integrator.",
                                                  cfg.integrator);
    cfg.replicates = detail::get_or(root, "replicates", cfg.replicates);
    if (root.contains("init")) cfg.init = detail::parse_initial(root.at("init"), "init.");
    cfg.distance_times = detail::get_or(root, "distance_times", cfg.distance_times);
    cfg.eps = detail::get_or(root, "eps", cfg.eps);
    cfg.k_list = detail::get_or(root, "k_list", cfg.k_list);
    cfg.burn_in = detail::get_or(root, "burn_in", cfg.burn_in);
    cfg.checkpoint_gap = detail::get_or(root, "checkpoint_gap", cfg.checkpoint_gap);
    cfg.stationarity_tol = detail::get_or(root, "stationarity_tol", cfg.stationarity_tol);
    cfg.max_time = detail::get_or(root, "max_time", cfg.max_time);
    cfg.picard_max_iter = detail::get_or(root, "picard_max_iter", cfg.picard_max_iter);
    cfg.picard_tol = detail::get_or(root, "picard_tol", cfg.picard_tol);
    if (root.contains("outputs")) {
        const json& out = root.at("outputs");
        detail::reject_unknown_keys(out, {"dir", "snapshots", "force"}, "outputs.");
        rc.outputs.dir = detail::get_or<std::string>(out, "dir", rc.outputs.dir);
        rc.outputs.snapshots = detail::get_or(out, "snapshots", rc.outputs.snapshots);
        rc.outputs.force = detail::get_or(out, "force", rc.outputs.force);
    }

    // Canonical resolved form: every knob, defaults applied.
    json c;
    c["experiment"] = cfg.experiment;
    c["seed"] = cfg.seed;
    c["model"] = cfg.model;
    c["family"] = {{"params", cfg.params}, {"limit_param", cfg.limit_param}};
    c["integrator"] = {{"N", cfg.integrator.N},
                       {"dt", cfg.integrator.dt},
                       {"T", cfg.integrator.T},
                       {"record_every", cfg.integrator.record_every},
                       {"blowup_threshold", cfg.integrator.blowup_threshold},
                       {"workers", cfg.integrator.workers}};
    c["replicates"] = cfg.replicates;
    switch (cfg.init.kind) {
        case InitialSpec::Kind::Constant:
            c["init"] = {{"kind", "constant"}, {"value", cfg.init.value}};
            break;
        case InitialSpec::Kind::Gaussian:
            c["init"] = {{"kind", "gaussian"}, {"mean", cfg.init.mean},
                         {"variance", cfg.init.variance}};
            break;
        case InitialSpec::Kind::Uniform:
            c["init"] = {{"kind", "uniform"}, {"lo", cfg.init.lo}, {"hi", cfg.init.hi}};
            break;
        case InitialSpec::Kind::Matrix:
            c["init"] = {{"kind", "matrix"}};
            break;
    }
    c["distance_times"] = cfg.distance_times;
    c["eps"] = cfg.eps;
    c["k_list"] = cfg.k_list;
    c["burn_in"] = cfg.burn_in;
    c["checkpoint_gap"] = cfg.checkpoint_gap;
    c["stationarity_tol"] = cfg.stationarity_tol;
    c["max_time"] = cfg.max_time;
    c["picard_max_iter"] = cfg.picard_max_iter;
    c["picard_tol"] = cfg.picard_tol;
    c["outputs"] = {{"dir", rc.outputs.dir}, {"snapshots", rc.outputs.snapshots}};
    rc.canonical = std::move(c);
    return rc;
}

inline ResolvedConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open '" + path + "'");
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw contract_error("config: invalid JSON in '" + path + "': " + e.what());
    }
    return resolve_config(root);
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunManifest {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string version = kArtifactVersion;
    std::string started_at;
    std::string finished_at;
    json resolved_config;

    json to_json() const {
        return json{{"seed", seed},
                    {"config_hash", config_hash},
                    {"version", version},
                    {"started_at", started_at},
                    {"finished_at", finished_at},
                    {"resolved_config", resolved_config}};
    }
};

inline std::string timestamp_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}

/// Refuses to reuse an output directory that already holds a manifest unless
/// forced.
inline void prepare_output_dir(const OutputSpec& out) {
    namespace fs = std::filesystem;
    fs::create_directories(out.dir);
    fs::path manifest = fs::path(out.dir) / "manifest.json";
    if (fs::exists(manifest) && !out.force)
        throw contract_error("output dir '" + out.dir +
                             "' already contains a manifest; pass force to overwrite");
}

inline void write_manifest(const OutputSpec& out, const RunManifest& manifest) {
    std::ofstream f(std::filesystem::path(out.dir) / "manifest.json");
    f << manifest.to_json().dump(2) << "\n";
}

inline void write_result_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream f(path);
    require(f.good(), "cannot open result file '" + path + "'");
    f << "experiment,param,time,statistic,value,mc_err\n";
    for (const auto& r : rows)
        f << r.experiment << ',' << format_double(r.param) << ',' << format_double(r.time) << ','
          << r.statistic << ',' << format_double(r.value) << ',' << format_double(r.mc_err)
          << '\n';
}

/// columns: time, particle_index, x_0..x_{d-1}
inline void write_snapshot_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream f(path);
    require(f.good(), "cannot open snapshot file '" + path + "'");
    f << "time,particle_index";
    for (int k = 0; k < traj.d; ++k) f << ",x_" << k;
    f << '\n';
    for (const auto& snap : traj.snapshots)
        for (int i = 0; i < traj.N; ++i) {
            f << format_double(snap.t) << ',' << i;
            for (int k = 0; k < traj.d; ++k)
                f << ',' << format_double(snap.states[static_cast<std::size_t>(i) * traj.d + k]);
            f << '\n';
        }
}

/// columns: time, mean per dim, second moment per dim
inline void write_summary_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream f(path);
    require(f.good(), "cannot open summary file '" + path + "'");
    f << "time";
    for (int k = 0; k < traj.d; ++k) f << ",mean_" << k;
    for (int k = 0; k < traj.d; ++k) f << ",second_moment_" << k;
    f << '\n';
    for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
        f << format_double(traj.time_at(s));
        for (int k = 0; k < traj.d; ++k) f << ',' << format_double(traj.mean[s][k]);
        for (int k = 0; k < traj.d; ++k) f << ',' << format_double(traj.second_moment[s][k]);
        f << '\n';
    }
}

/// Reads a numeric CSV of sample points (one point per row, one column per
/// dimension). A non-numeric first row is treated as a header and skipped.
inline EmpiricalMeasure read_samples_csv(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open sample file '" + path + "'");
    std::vector<double> points;
    int d = -1;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                double v = std::stod(cell, &pos);
                if (pos == 0) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            require(first, "sample file '" + path + "': non-numeric row past the header");
            first = false;
            continue;
        }
        first = false;
        if (d < 0) d = static_cast<int>(row.size());
        require(static_cast<int>(row.size()) == d,
                "sample file '" + path + "': ragged rows");
        points.insert(points.end(), row.begin(), row.end());
    }
    require(d >= 1 && !points.empty(), "sample file '" + path + "': no data rows");
    int n = static_cast<int>(points.size()) / d;
    return EmpiricalMeasure(std::move(points), n, d);
}

}  // namespace mvlab
