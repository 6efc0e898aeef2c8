#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mvlab {

/// Precondition or dimension-contract failure. CLI maps this to exit code 1.
class contract_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Trajectory left the finite/bounded regime. CLI maps this to exit code 2.
class blowup_error : public std::runtime_error {
public:
    blowup_error(std::string msg, double t, std::int64_t step, std::int64_t particle)
        : std::runtime_error(std::move(msg)), t(t), step(step), particle(particle) {}

    double t;
    std::int64_t step;
    std::int64_t particle;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw contract_error(msg);
}

// FNV-1a, used for stream labels (32-bit) and config hashes (64-bit).
inline std::uint32_t fnv1a32(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Shortest representation that round-trips through parsing; keeps CSV output
/// diffable across reruns.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

inline bool all_finite(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

}  // namespace mvlab
