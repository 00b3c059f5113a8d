#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "mmtc/common.hpp"

namespace mmtc {

/// Deterministic random substreams.
///
/// Every consumer of randomness receives its own engine seeded from
/// (master seed, trial index, purpose tag). Nothing in the library touches
/// a global generator, so results depend only on these three values and
/// never on scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng substream(std::uint64_t master, std::uint64_t index, std::string_view tag);
    static Rng substream(std::uint64_t master, std::uint64_t i, std::uint64_t j, std::string_view tag);

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    double normal() { return normal_(engine_); }

    // CN(0, var): real and imaginary parts each N(0, var/2).
    cplx complex_normal(double var) {
        const double s = std::sqrt(var / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_tag(std::string_view tag);

}  // namespace mmtc
