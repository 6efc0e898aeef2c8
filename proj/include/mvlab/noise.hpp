#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvlab/core.hpp"

namespace mvlab {

namespace detail {

// Philox4x32-10 (Salmon et al., SC'11). Counter layout used here:
//   v = { component-pair index, label hash, particle index, step index }
// key = the 64-bit stream seed. Fixed for the lifetime of the artifact so
// trajectories are bit-reproducible across builds.
struct PhiloxBlock {
    std::uint32_t v[4];
};

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, std::uint32_t k0, std::uint32_t k1) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr.v[0];
        std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr.v[2];
        PhiloxBlock next;
        next.v[0] = static_cast<std::uint32_t>(p1 >> 32) ^ ctr.v[1] ^ k0;
        next.v[1] = static_cast<std::uint32_t>(p1);
        next.v[2] = static_cast<std::uint32_t>(p0 >> 32) ^ ctr.v[3] ^ k1;
        next.v[3] = static_cast<std::uint32_t>(p0);
        ctr = next;
        k0 += W0;
        k1 += W1;
    }
    return ctr;
}

inline double to_unit_interval(std::uint32_t w) {
    // (w + 0.5) / 2^32, strictly inside (0, 1) so log() below is safe.
    return (static_cast<double>(w) + 0.5) * 0x1p-32;
}

}  // namespace detail

/// Gaussian increment stream with random access by (particle, step): every
/// draw is a pure function of (seed, stream label, particle, step, component),
/// so trajectories do not depend on call order or thread assignment.
///
/// Each pair of components consumes one Philox block: two uniforms from the
/// first two output words, mapped through Box-Muller. Odd n discards the
/// second normal of the last pair.
class BrownianSource {
public:
    BrownianSource(std::uint64_t seed, int n, double dt, std::string label = "root")
        : seed_(seed), n_(n), dt_(dt), label_(std::move(label)) {
        require(n_ >= 1, "BrownianSource: noise dimension must be positive");
        require(dt_ >= 0.0, "BrownianSource: dt must be nonnegative");
        label_hash_ = fnv1a32(label_);
    }

    std::uint64_t seed() const { return seed_; }
    int n() const { return n_; }
    double dt() const { return dt_; }
    const std::string& label() const { return label_; }

    /// Independent substream; labels nest as "parent/child".
    BrownianSource split(std::string_view label) const {
        return BrownianSource(seed_, n_, dt_, label_ + "/" + std::string(label));
    }

    BrownianSource with_dt(double dt) const { return BrownianSource(seed_, n_, dt, label_); }
    BrownianSource with_n(int n) const { return BrownianSource(seed_, n, dt_, label_); }

    /// Writes the n-vector dW ~ N(0, dt I) for this (particle, step).
    void fill_increment(std::uint64_t particle, std::uint64_t step, std::span<double> out) const {
        require(out.size() == static_cast<std::size_t>(n_),
                "fill_increment: output span has wrong length");
        double scale = std::sqrt(dt_);
        for (int pair = 0; 2 * pair < n_; ++pair) {
            auto [z0, z1] = normal_pair(particle, step, pair);
            out[2 * pair] = scale * z0;
            if (2 * pair + 1 < n_) out[2 * pair + 1] = scale * z1;
        }
    }

    std::vector<double> gaussian_increment(std::uint64_t particle, std::uint64_t step) const {
        std::vector<double> out(n_);
        fill_increment(particle, step, out);
        return out;
    }

    /// Scalar N(0, dt) draw; only valid shortcut when n == 1 callers want the
    /// first component.
    double gaussian1(std::uint64_t particle, std::uint64_t step) const {
        auto [z0, z1] = normal_pair(particle, step, 0);
        (void)z1;
        return std::sqrt(dt_) * z0;
    }

    /// Uniform(0,1) keyed by the same counter scheme (used by initial-state
    /// samplers and the counterexample atom construction).
    double uniform01(std::uint64_t particle, std::uint64_t step) const {
        detail::PhiloxBlock b = block(particle, step, 0);
        return detail::to_unit_interval(b.v[0]);
    }

private:
    detail::PhiloxBlock block(std::uint64_t particle, std::uint64_t step,
                              std::uint32_t pair) const {
        // Indices beyond 2^32 would alias; no workload here comes close.
        detail::PhiloxBlock ctr{{pair, label_hash_, static_cast<std::uint32_t>(particle),
                                 static_cast<std::uint32_t>(step)}};
        return detail::philox4x32_10(ctr, static_cast<std::uint32_t>(seed_),
                                     static_cast<std::uint32_t>(seed_ >> 32));
    }

    std::pair<double, double> normal_pair(std::uint64_t particle, std::uint64_t step,
                                          std::uint32_t pair) const {
        detail::PhiloxBlock b = block(particle, step, pair);
        double u1 = detail::to_unit_interval(b.v[0]);
        double u2 = detail::to_unit_interval(b.v[1]);
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    std::uint64_t seed_;
    int n_;
    double dt_;
    std::string label_;
    std::uint32_t label_hash_;
};

}  // namespace mvlab
