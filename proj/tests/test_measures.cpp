#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mvlab/empirical_measure.hpp"
#include "mvlab/noise.hpp"
#include "mvlab/oracles.hpp"
#include "mvlab/wasserstein.hpp"

using namespace mvlab;

namespace {

EmpiricalMeasure random_measure(const BrownianSource& src, int n, int d, int tag,
                                double shift = 0.0) {
    BrownianSource g = src.split("m" + std::to_string(tag)).with_n(d).with_dt(1.0);
    std::vector<double> pts(static_cast<std::size_t>(n) * d);
    std::vector<double> z(d);
    for (int i = 0; i < n; ++i) {
        g.fill_increment(static_cast<std::uint64_t>(i), 0, z);
        for (int k = 0; k < d; ++k) pts[static_cast<std::size_t>(i) * d + k] = z[k] + shift;
    }
    return EmpiricalMeasure(std::move(pts), n, d);
}

}  // namespace

TEST_CASE("moments of small measures") {
    auto mu = EmpiricalMeasure::from_samples_1d({1.0, -1.0});
    REQUIRE(mu.mean(0) == 0.0);
    REQUIRE(mu.second_moment(0) == 1.0);
    REQUIRE(moment(mu, MomentSpec::component_power(0, 2)) == 1.0);
    auto atom = EmpiricalMeasure::from_samples_1d({2.0});
    REQUIRE(moment(atom, MomentSpec::component_power(0, 10)) == 1024.0);
    REQUIRE(moment(atom, MomentSpec::abs_power(10)) == 1024.0);
    REQUIRE_THROWS_AS(atom.component_moment(0, 11), contract_error);
}

TEST_CASE("1D Wasserstein basics") {
    auto mu = EmpiricalMeasure::from_samples_1d({0.0, 2.0});
    auto nu = EmpiricalMeasure::from_samples_1d({1.0, 3.0});
    REQUIRE(wasserstein_1d(mu, mu, 2) == 0.0);
    REQUIRE(wasserstein_1d(mu, nu, 2) == Catch::Approx(1.0).margin(1e-14));
    auto a = EmpiricalMeasure::from_samples_1d({4.0});
    auto b = EmpiricalMeasure::from_samples_1d({-1.5});
    REQUIRE(wasserstein_1d(a, b, 1) == Catch::Approx(5.5));
    REQUIRE_THROWS_AS(wasserstein_1d(mu, EmpiricalMeasure::from_samples_1d({1.0}), 2),
                      contract_error);
}

TEST_CASE("assignment matches sorted pairing in 1D and brute force in general") {
    BrownianSource src(101, 1, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + trial % 5;
        int d = 1 + trial % 3;
        auto mu = random_measure(src, n, d, 2 * trial);
        auto nu = random_measure(src, n, d, 2 * trial + 1, 0.5);
        for (int p : {1, 2}) {
            double assigned = wasserstein_assignment(mu, nu, p);
            double brute = brute_force_wasserstein(mu, nu, p);
            REQUIRE(assigned == Catch::Approx(brute).margin(1e-12));
            if (d == 1)
                REQUIRE(assigned == Catch::Approx(wasserstein_1d(mu, nu, p)).margin(1e-12));
        }
    }
}

TEST_CASE("brute force agrees with the independent 1D permutation oracle") {
    std::vector<double> xs{0.3, -1.2, 2.0, 0.9};
    std::vector<double> ys{1.1, 0.0, -0.4, 2.2};
    auto mu = EmpiricalMeasure::from_samples_1d(xs);
    auto nu = EmpiricalMeasure::from_samples_1d(ys);
    REQUIRE(brute_force_wasserstein(mu, nu, 2) ==
            Catch::Approx(oracles::brute_force_w2_1d(xs, ys)).margin(1e-13));
}

TEST_CASE("assignment over cap is rejected with advice") {
    BrownianSource src(7, 1, 1.0);
    auto mu = random_measure(src, 10, 2, 0);
    auto nu = random_measure(src, 10, 2, 1);
    REQUIRE_THROWS_AS(wasserstein_assignment(mu, nu, 2, 8), contract_error);
    REQUIRE_THROWS_AS(brute_force_wasserstein(random_measure(src, 9, 1, 2),
                                              random_measure(src, 9, 1, 3), 2),
                      contract_error);
}

TEST_CASE("metric properties on random instances") {
    BrownianSource src(55, 1, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + trial % 4, d = 1 + trial % 2;
        auto a = random_measure(src, n, d, 3 * trial);
        auto b = random_measure(src, n, d, 3 * trial + 1, 0.7);
        auto c = random_measure(src, n, d, 3 * trial + 2, -0.4);
        for (int p : {1, 2}) {
            double ab = wasserstein_assignment(a, b, p);
            double ba = wasserstein_assignment(b, a, p);
            REQUIRE(ab == Catch::Approx(ba).margin(1e-12));
            REQUIRE(wasserstein_assignment(a, a, p) == Catch::Approx(0.0).margin(1e-12));
            double ac = wasserstein_assignment(a, c, p);
            double cb = wasserstein_assignment(c, b, p);
            REQUIRE(ab <= (ac + cb) * (1.0 + 1e-9) + 1e-12);
        }
        // W1 <= W2 (Jensen) on the same sample pair
        REQUIRE(wasserstein_assignment(a, b, 1) <= wasserstein_assignment(a, b, 2) + 1e-12);
    }
}

TEST_CASE("translation invariance") {
    BrownianSource src(17, 1, 1.0);
    auto a = random_measure(src, 5, 2, 0);
    auto b = random_measure(src, 5, 2, 1, 1.0);
    auto translate = [](const EmpiricalMeasure& m, double c) {
        std::vector<double> pts(m.data().begin(), m.data().end());
        for (double& v : pts) v += c;
        return EmpiricalMeasure(std::move(pts), m.size(), m.dim());
    };
    double base = wasserstein_assignment(a, b, 2);
    REQUIRE(wasserstein_assignment(translate(a, 3.25), translate(b, 3.25), 2) ==
            Catch::Approx(base).margin(1e-12));
}

TEST_CASE("any explicit pairing dominates the assignment optimum") {
    BrownianSource src(23, 1, 1.0);
    auto a = random_measure(src, 6, 2, 0);
    auto b = random_measure(src, 6, 2, 1, 0.3);
    double opt = wasserstein_assignment(a, b, 2);
    // identity pairing
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        auto x = a.point(i);
        auto y = b.point(i);
        for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - y[k]) * (x[k] - y[k]);
    }
    REQUIRE(std::sqrt(acc / a.size()) >= opt - 1e-12);
}

TEST_CASE("sliced estimator") {
    BrownianSource src(31, 1, 1.0);
    auto mu = random_measure(src, 64, 1, 0);
    SECTION("identical measures give zero") {
        REQUIRE(sliced_wasserstein(mu, mu, 2, 16, src) == 0.0);
    }
    SECTION("1D slicing equals the exact 1D distance") {
        auto nu = random_measure(src, 64, 1, 1, 0.8);
        REQUIRE(sliced_wasserstein(mu, nu, 2, 7, src) ==
                Catch::Approx(wasserstein_1d(mu, nu, 2)).margin(1e-12));
    }
    SECTION("2D separated Gaussians land near the assignment value") {
        auto a = random_measure(src, 512, 2, 10);
        auto b = random_measure(src, 512, 2, 11, 2.0);
        double sliced = sliced_wasserstein(a, b, 2, 64, src);
        double exact = wasserstein_assignment(a, b, 2);
        REQUIRE(std::abs(sliced - exact) < 0.5 * exact);
    }
}

TEST_CASE("convergence-in-probability statistic") {
    std::vector<double> a{0.0, 1.0, 2.0, 3.0};
    std::vector<double> b{0.0, 1.0, 2.0, 3.0};
    REQUIRE(convergence_in_probability_stat(a, b, 0.5) == 0.0);
    std::vector<double> c{1.0, 2.0, 3.0, 4.0};
    REQUIRE(convergence_in_probability_stat(a, c, 0.5) == 1.0);
    REQUIRE(convergence_in_probability_stat(a, c, 1.5) == 0.0);
}

TEST_CASE("path_sup_gap is the rms of the per-particle sups") {
    std::vector<double> sups{3.0, 4.0};
    REQUIRE(path_sup_gap(sups) == Catch::Approx(std::sqrt(12.5)));
}
