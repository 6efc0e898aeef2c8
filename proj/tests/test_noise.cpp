#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mvlab/noise.hpp"

using mvlab::BrownianSource;

TEST_CASE("same key yields identical draws") {
    BrownianSource src(42, 3, 0.01);
    auto a = src.gaussian_increment(7, 11);
    auto b = src.gaussian_increment(7, 11);
    REQUIRE(a == b);
}

TEST_CASE("draws differ across particles, steps and labels") {
    BrownianSource src(42, 1, 0.01);
    REQUIRE(src.gaussian1(0, 0) != src.gaussian1(1, 0));
    REQUIRE(src.gaussian1(0, 0) != src.gaussian1(0, 1));
    REQUIRE(src.gaussian1(0, 0) != src.split("other").gaussian1(0, 0));
}

TEST_CASE("dt zero gives the zero vector") {
    BrownianSource src(1, 4, 0.0);
    for (double v : src.gaussian_increment(3, 5)) REQUIRE(v == 0.0);
}

TEST_CASE("marginals match N(0, dt) within CLT bounds") {
    const double dt = 0.25;
    const int n_draws = 1'000'000;
    BrownianSource src(0, 1, dt);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n_draws; ++i) {
        double z = src.gaussian1(static_cast<std::uint64_t>(i), 0);
        sum += z;
        sum_sq += z * z;
    }
    double mean = sum / n_draws;
    double var = sum_sq / n_draws - mean * mean;
    REQUIRE(std::abs(mean) < 4.0 * std::sqrt(dt / n_draws));
    REQUIRE(std::abs(var - dt) < 0.02 * dt);
}

TEST_CASE("split streams are uncorrelated") {
    const int n_draws = 100'000;
    BrownianSource src(9, 1, 1.0);
    BrownianSource a = src.split("a"), b = src.split("b");
    double acc = 0.0;
    for (int i = 0; i < n_draws; ++i)
        acc += a.gaussian1(static_cast<std::uint64_t>(i), 0) *
               b.gaussian1(static_cast<std::uint64_t>(i), 0);
    REQUIRE(std::abs(acc / n_draws) < 4.0 / std::sqrt(static_cast<double>(n_draws)));
}

TEST_CASE("splitting is pure") {
    BrownianSource src(5, 2, 0.5);
    auto s1 = src.split("sub");
    auto before = s1.gaussian_increment(1, 2);
    auto s2 = src.split("sub");
    REQUIRE(before == s2.gaussian_increment(1, 2));
    REQUIRE(s1.label() == s2.label());
}

TEST_CASE("uniforms lie strictly inside the unit interval") {
    BrownianSource src(3, 1, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double u = src.uniform01(static_cast<std::uint64_t>(i), 0);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}
