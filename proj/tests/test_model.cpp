#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mvlab/empirical_measure.hpp"
#include "mvlab/model.hpp"

using namespace mvlab;

TEST_CASE("example1 drift substitutes the second moment") {
    ModelSpec m = builtin_model("example1", {{"lambda", 1.0}});
    auto mu = EmpiricalMeasure::from_samples_1d({1.0, -1.0});
    REQUIRE(eval_drift_1d(m, 0.0, 2.0, mu) == -2.0);
    REQUIRE(eval_diffusion_1d(builtin_model("example1", {{"lambda", 0.5}}), 0.0, 2.0, mu) ==
            Catch::Approx((std::numbers::sqrt2 + 0.5) * 2.0));
}

TEST_CASE("counterexample drift is the mean, diffusion is sqrt 2") {
    ModelSpec m = builtin_model("counterexample");
    auto mu = EmpiricalMeasure::from_samples_1d({1.0, 3.0});
    REQUIRE(eval_drift_1d(m, 0.0, -7.5, mu) == 2.0);
    REQUIRE(eval_diffusion_1d(m, 3.0, 0.0, mu) == std::numbers::sqrt2);
}

TEST_CASE("example2 coefficients") {
    ModelSpec m = builtin_model("example2", {{"lambda", 1.0}});
    auto delta0 = EmpiricalMeasure::dirac1d(0.0);
    REQUIRE(eval_drift_1d(m, 0.0, 1.0, delta0) == -3.0);
    auto delta5 = EmpiricalMeasure::dirac1d(5.0);
    REQUIRE(eval_diffusion_1d(m, 0.0, 5.0, delta5) == 0.0);
}

TEST_CASE("example3 coefficients") {
    auto delta0 = EmpiricalMeasure::dirac1d(0.0);
    REQUIRE(eval_drift_1d(builtin_model("example3", {{"lambda", 0.0}}), 0.0, 1.0, delta0) == -6.0);
    REQUIRE(eval_drift_1d(builtin_model("example3", {{"lambda", 0.5}}), 0.0, 2.0, delta0) ==
            -11.0);
}

TEST_CASE("unknown names and missing parameters are rejected") {
    REQUIRE_THROWS_AS(builtin_model("modle"), contract_error);
    REQUIRE_THROWS_AS(builtin_model("example1"), contract_error);
}

TEST_CASE("monotonicity margin") {
    SECTION("example3 constants give 2(1 - lambda)") {
        for (double lambda : {0.0, 0.5, 0.9}) {
            double margin = check_monotonicity_margin({6.0 - lambda, 1.0, 1.0});
            REQUIRE(margin == Catch::Approx(2.0 * (1.0 - lambda)).margin(1e-15));
        }
    }
    SECTION("edge values") {
        REQUIRE(check_monotonicity_margin({0.0, 0.0, 0.0}) == 0.0);
        REQUIRE(check_monotonicity_margin({5.0, 1.0, 1.0}) == 0.0);
        REQUIRE_THROWS_AS(check_monotonicity_margin({-1.0, 0.0, 0.0}), contract_error);
    }
}

TEST_CASE("coefficient purity") {
    ModelSpec m = builtin_model("example1", {{"lambda", 0.7}});
    auto mu = EmpiricalMeasure::from_samples_1d({0.3, -1.1, 2.2});
    double first = eval_drift_1d(m, 0.5, 1.25, mu);
    for (int i = 0; i < 5; ++i) REQUIRE(eval_drift_1d(m, 0.5, 1.25, mu) == first);
}

TEST_CASE("example2 drift kills the mean") {
    ModelSpec m = builtin_model("example2", {{"lambda", 1.3}});
    std::vector<double> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(std::sin(3.7 * i) + 0.2 * i);
    auto mu = EmpiricalMeasure::from_samples_1d(pts);
    double acc = 0.0;
    for (double x : pts) acc += eval_drift_1d(m, 0.0, x, mu);
    REQUIRE(std::abs(acc / pts.size()) <= 1e-12 * pts.size());
}

TEST_CASE("dimension contracts are enforced") {
    ModelSpec m = builtin_model("counterexample");
    std::vector<double> x2{1.0, 2.0};
    auto mu = EmpiricalMeasure::dirac1d(0.0);
    REQUIRE_THROWS_AS(eval_drift(m, 0.0, x2, mu), contract_error);
    auto mu2 = EmpiricalMeasure({0.0, 0.0}, 1, 2);
    double x = 1.0;
    REQUIRE_THROWS_AS(eval_drift(m, 0.0, std::span<const double>(&x, 1), mu2), contract_error);
}

TEST_CASE("non-finite coefficient output raises the blow-up diagnostic") {
    ModelSpec m;
    m.name = "bad";
    m.drift = scalar_coefficient(
        [](double, double x, const EmpiricalMeasure&) { return 1.0 / (x - x); });
    m.diffusion = scalar_coefficient([](double, double, const EmpiricalMeasure&) { return 0.0; });
    auto mu = EmpiricalMeasure::dirac1d(0.0);
    REQUIRE_THROWS_AS(eval_drift_1d(m, 0.0, 1.0, mu), blowup_error);
}

TEST_CASE("frozen flow with the live flow reproduces the base model") {
    ModelSpec base = builtin_model("example2", {{"lambda", 1.0}});
    auto mu0 = EmpiricalMeasure::from_samples_1d({0.5, -0.5, 1.5});
    auto mu1 = EmpiricalMeasure::from_samples_1d({0.7, -0.1, 1.1});
    auto flow = std::make_shared<const MeasureFlow>(
        MeasureFlow({0.0, 1.0}, {mu0, mu1}));
    ModelSpec frozen = frozen_flow_model(base, flow);
    // at t in [0,1) the frozen model sees mu0 regardless of the live measure
    auto live = EmpiricalMeasure::from_samples_1d({9.0, 9.0, 9.0});
    REQUIRE(eval_drift_1d(frozen, 0.5, 2.0, live) == eval_drift_1d(base, 0.5, 2.0, mu0));
    REQUIRE(eval_drift_1d(frozen, 1.0, 2.0, live) == eval_drift_1d(base, 1.0, 2.0, mu1));
    REQUIRE(eval_drift_1d(frozen, 0.5, 2.0, mu0) == eval_drift_1d(base, 0.5, 2.0, mu0));
}

TEST_CASE("measure flow lookup clamps and rejects bad grids") {
    auto m0 = EmpiricalMeasure::dirac1d(0.0);
    auto m1 = EmpiricalMeasure::dirac1d(1.0);
    MeasureFlow flow({0.0, 2.0}, {m0, m1});
    REQUIRE(flow.at(-1.0).mean(0) == 0.0);
    REQUIRE(flow.at(1.99).mean(0) == 0.0);
    REQUIRE(flow.at(2.0).mean(0) == 1.0);
    REQUIRE(flow.at(100.0).mean(0) == 1.0);
    REQUIRE_THROWS_AS(MeasureFlow({0.0, 0.0}, {m0, m1}), contract_error);
}

TEST_CASE("builtin families share (d, n) across parameters") {
    ModelFamily fam = builtin_family("example3", 0.0);
    for (double lambda : {0.0, 0.4, 0.9}) {
        ModelSpec m = fam.make(lambda);
        REQUIRE(m.d == 1);
        REQUIRE(m.n == 1);
    }
}
