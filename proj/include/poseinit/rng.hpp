#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace poseinit {

/// Seedable generator with portable output. The engine is mt19937_64, whose
/// sequence is fixed by the standard; the real-valued conversions below are
/// done here rather than through <random> distributions, which are not
/// specified bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Child seed for a labeled subsystem: splitmix64(root ^ fnv1a64(label)).
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

}  // namespace poseinit
