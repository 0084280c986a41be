#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace topoplan {

// Mixes (root, stream, index) into an independent 64-bit seed. Streams derived
// this way are order-independent, which keeps lazily built sample caches and
// parallel-style rollout loops reproducible.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

// Named RNG streams used across the library.
enum : std::uint64_t {
    kStreamRollout = 0x726f6c6c,    // policy rollouts
    kStreamModel = 0x6d6f646c,      // empirical next-state sampling
    kStreamTrajectory = 0x74726a73, // ADP trajectory batches
    kStreamStart = 0x73747274,      // ADP start-state draws
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0,1) built from the top 53 bits; bit-stable across platforms.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(uniform01() * static_cast<double>(n)) % n;
    }

    // Inverse-CDF draw from an explicit distribution (weights need not be
    // normalized exactly; the last entry absorbs rounding slack).
    int categorical(std::span<const double> weights);

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace topoplan
