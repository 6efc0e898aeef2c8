#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mvlab/core.hpp"
#include "mvlab/empirical_measure.hpp"

namespace mvlab {

/// Piecewise-constant flow of empirical measures on a strictly increasing time
/// grid; lookup returns the measure at the greatest grid time <= t. This is
/// the frozen law used by the Picard construction.
class MeasureFlow {
public:
    MeasureFlow(std::vector<double> times, std::vector<EmpiricalMeasure> measures)
        : times_(std::move(times)), measures_(std::move(measures)) {
        require(!times_.empty(), "MeasureFlow: empty time grid");
        require(times_.size() == measures_.size(), "MeasureFlow: grid/measure size mismatch");
        for (std::size_t i = 1; i < times_.size(); ++i)
            require(times_[i] > times_[i - 1], "MeasureFlow: time grid must be strictly increasing");
        int d = measures_.front().dim();
        for (const auto& m : measures_)
            require(m.dim() == d, "MeasureFlow: all measures must share the same dimension");
    }

    /// Constant-in-time flow (Picard iterate 0).
    static MeasureFlow constant(EmpiricalMeasure m) {
        return MeasureFlow({0.0}, {std::move(m)});
    }

    const EmpiricalMeasure& at(double t) const {
        // Clamp below the grid to the first entry.
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        std::size_t idx = (it == times_.begin()) ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
        return measures_[idx];
    }

    const std::vector<double>& times() const { return times_; }
    const std::vector<EmpiricalMeasure>& measures() const { return measures_; }

private:
    std::vector<double> times_;
    std::vector<EmpiricalMeasure> measures_;
};

/// Mean-field coefficient: a pure function of (t, x, mu) with a declared
/// output shape (rows x cols; cols == 1 for drifts).
struct MeanFieldCoefficient {
    int dim_in = 1;
    int rows = 1;
    int cols = 1;
    std::function<void(double t, std::span<const double> x, const EmpiricalMeasure& mu,
                       std::span<double> out)>
        eval;
};

/// Scalar (d = n = 1) coefficient helper; all built-in models live here.
inline MeanFieldCoefficient scalar_coefficient(
    std::function<double(double t, double x, const EmpiricalMeasure&)> f) {
    MeanFieldCoefficient c;
    c.dim_in = c.rows = c.cols = 1;
    c.eval = [f = std::move(f)](double t, std::span<const double> x, const EmpiricalMeasure& mu,
                                std::span<double> out) { out[0] = f(t, x[0], mu); };
    return c;
}

struct ModelSpec {
    std::string name;
    int d = 1;  // state dimension
    int n = 1;  // noise dimension
    MeanFieldCoefficient drift;      // output d
    MeanFieldCoefficient diffusion;  // output d x n
    std::map<std::string, double> params;
};

/// One-parameter family with a designated limit parameter.
struct ModelFamily {
    std::string param_name;
    double limit_param = 0.0;
    std::function<ModelSpec(double)> make;
};

/// Constants of the one-sided Lipschitz (monotone) hypothesis.
struct MonotonicityConstants {
    double L1 = 0.0;  // drift contraction rate
    double L2 = 0.0;  // measure coupling rate
    double L = 0.0;   // Lipschitz constant of sigma (and of b in the Lipschitz case)
};

/// 2 L1 - 2 L2 - 8 L^2; positive iff the contraction hypothesis holds.
inline double check_monotonicity_margin(const MonotonicityConstants& c) {
    require(c.L1 >= 0 && c.L2 >= 0 && c.L >= 0,
            "check_monotonicity_margin: constants must be nonnegative");
    return 2.0 * c.L1 - 2.0 * c.L2 - 8.0 * c.L * c.L;
}

namespace detail {

inline void check_model_input(const ModelSpec& model, std::span<const double> x,
                              const EmpiricalMeasure& mu) {
    require(static_cast<int>(x.size()) == model.d, "coefficient evaluation: state dim mismatch");
    require(mu.dim() == model.d, "coefficient evaluation: measure dim mismatch");
}

inline void check_coefficient_output(const char* which, const ModelSpec& model, double t,
                                     std::span<const double> x, std::span<const double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(out[i])) {
            std::ostringstream msg;
            msg << which << " produced non-finite component " << i << " at t=" << t
                << " x0=" << x[0];
            throw blowup_error(msg.str(), t, -1, -1);
        }
    }
}

}  // namespace detail

inline std::vector<double> eval_drift(const ModelSpec& model, double t, std::span<const double> x,
                                      const EmpiricalMeasure& mu) {
    detail::check_model_input(model, x, mu);
    std::vector<double> out(model.d);
    model.drift.eval(t, x, mu, out);
    detail::check_coefficient_output("drift", model, t, x, out);
    return out;
}

inline double eval_drift_1d(const ModelSpec& model, double t, double x,
                            const EmpiricalMeasure& mu) {
    return eval_drift(model, t, std::span<const double>(&x, 1), mu)[0];
}

/// Returns the d x n diffusion matrix, row-major.
inline std::vector<double> eval_diffusion(const ModelSpec& model, double t,
                                          std::span<const double> x, const EmpiricalMeasure& mu) {
    detail::check_model_input(model, x, mu);
    std::vector<double> out(static_cast<std::size_t>(model.d) * model.n);
    model.diffusion.eval(t, x, mu, out);
    detail::check_coefficient_output("diffusion", model, t, x, out);
    return out;
}

inline double eval_diffusion_1d(const ModelSpec& model, double t, double x,
                                const EmpiricalMeasure& mu) {
    return eval_diffusion(model, t, std::span<const double>(&x, 1), mu)[0];
}

namespace detail {

inline double get_param(const std::map<std::string, double>& params, const std::string& key) {
    auto it = params.find(key);
    require(it != params.end(), "builtin_model: missing parameter '" + key + "'");
    return it->second;
}

}  // namespace detail

/// Registry of the built-in scalar models.
///
///   example1:        dX = -lambda X int y^2 mu(dy) dt + (sqrt2 + lambda) X dW
///   example2:        dX = -3 lambda (X - m) dt + (X - m) dW,   m = int y mu(dy)
///   example3:        dX = ((-6 + lambda) X + m) dt + (X + lambda m) dW
///   counterexample:  dX = m dt + sqrt2 dW
inline ModelSpec builtin_model(const std::string& name,
                               const std::map<std::string, double>& params = {}) {
    ModelSpec spec;
    spec.name = name;
    spec.params = params;
    if (name == "example1") {
        double lambda = detail::get_param(params, "lambda");
        spec.drift = scalar_coefficient([lambda](double, double x, const EmpiricalMeasure& mu) {
            return -lambda * x * mu.second_moment(0);
        });
        spec.diffusion = scalar_coefficient([lambda](double, double x, const EmpiricalMeasure&) {
            return (std::numbers::sqrt2 + lambda) * x;
        });
    } else if (name == "example2") {
        double lambda = detail::get_param(params, "lambda");
        spec.drift = scalar_coefficient([lambda](double, double x, const EmpiricalMeasure& mu) {
            return -3.0 * lambda * x + 3.0 * lambda * mu.mean(0);
        });
        spec.diffusion = scalar_coefficient([](double, double x, const EmpiricalMeasure& mu) {
            return x - mu.mean(0);
        });
    } else if (name == "example3") {
        double lambda = detail::get_param(params, "lambda");
        spec.drift = scalar_coefficient([lambda](double, double x, const EmpiricalMeasure& mu) {
            return (-6.0 + lambda) * x + mu.mean(0);
        });
        spec.diffusion = scalar_coefficient([lambda](double, double x, const EmpiricalMeasure& mu) {
            return x + lambda * mu.mean(0);
        });
    } else if (name == "counterexample") {
        spec.drift = scalar_coefficient(
            [](double, double, const EmpiricalMeasure& mu) { return mu.mean(0); });
        spec.diffusion = scalar_coefficient(
            [](double, double, const EmpiricalMeasure&) { return std::numbers::sqrt2; });
    } else {
        throw contract_error("builtin_model: unknown model '" + name + "'");
    }
    return spec;
}

/// Wraps a base model, replacing the live empirical measure by a fixed
/// time-indexed measure flow (the Picard device).
inline ModelSpec frozen_flow_model(const ModelSpec& base, std::shared_ptr<const MeasureFlow> flow) {
    require(flow != nullptr, "frozen_flow_model: null measure flow");
    require(flow->measures().front().dim() == base.d, "frozen_flow_model: flow dim mismatch");
    ModelSpec spec = base;
    spec.name = base.name + "+frozen_flow";
    MeanFieldCoefficient drift = base.drift;
    spec.drift.eval = [flow, inner = base.drift.eval](double t, std::span<const double> x,
                                                      const EmpiricalMeasure&,
                                                      std::span<double> out) {
        inner(t, x, flow->at(t), out);
    };
    spec.diffusion.eval = [flow, inner = base.diffusion.eval](double t, std::span<const double> x,
                                                              const EmpiricalMeasure&,
                                                              std::span<double> out) {
        inner(t, x, flow->at(t), out);
    };
    return spec;
}

/// One-parameter families over the built-ins, parameterised by "lambda".
inline ModelFamily builtin_family(const std::string& name, double limit_param) {
    require(name == "example1" || name == "example2" || name == "example3",
            "builtin_family: unknown family '" + name + "'");
    ModelFamily fam;
    fam.param_name = "lambda";
    fam.limit_param = limit_param;
    fam.make = [name](double lambda) { return builtin_model(name, {{"lambda", lambda}}); };
    return fam;
}

}  // namespace mvlab
