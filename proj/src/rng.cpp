#include "topoplan/rng.hpp"

namespace topoplan {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
    return mix(mix(root ^ 0x5851f42d4c957f2dULL) ^ mix(stream) ^ mix(index * 0xda942042e4dd58b5ULL + 1));
}

int Rng::categorical(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    double cum = 0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace topoplan
