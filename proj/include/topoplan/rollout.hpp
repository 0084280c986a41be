#pragma once

#include <cstdint>
#include <vector>

#include "topoplan/simulator.hpp"
#include "topoplan/solvers.hpp"

namespace topoplan {

enum class Termination { accepting, sink, length_cap };

struct TrajectoryStep {
    int state = 0;
    int action = 0;
    double reward = 0.0;
};

struct Trajectory {
    int start = 0;
    std::vector<TrajectoryStep> steps;
    int final_state = 0;
    Termination terminated = Termination::length_cap;
};

// Rolls the stochastic policy through the simulator for at most max_len steps
// or until an absorbing state. Reproducible under a fixed rng.
Trajectory sample_trajectory(const ProductSimulator& sim, const ProductStructure& structure,
                             const SoftPolicy& policy, int start, int max_len, Rng& rng);

struct RolloutStats {
    long long n_runs = 0;
    long long successes = 0;
    long long failures_sink = 0;
    long long failures_timeout = 0;
    double success_rate = 0.0;
};

// n_runs independent rollouts with per-run RNG streams derived from
// (seed, run index). Success means reaching an accepting product state within
// step_cap steps; absorption elsewhere counts as sink, the rest as timeout.
RolloutStats simulate_policy(const ProductSimulator& sim, const ProductStructure& structure,
                             const SoftPolicy& policy, int start, long long n_runs, int step_cap,
                             std::uint64_t seed);

}  // namespace topoplan
