#include "topoplan/rollout.hpp"

#include "topoplan/errors.hpp"

namespace topoplan {

namespace {

int sample_action(const std::vector<double>& dist, Rng& rng) {
    double u = rng.uniform01();
    double cum = 0;
    int last = -1;
    for (std::size_t a = 0; a < dist.size(); ++a) {
        if (dist[a] <= 0) continue;
        last = static_cast<int>(a);
        cum += dist[a];
        if (u < cum) return last;
    }
    if (last < 0) throw ValidationError("policy row has no positive action probability");
    return last;
}

}  // namespace

Trajectory sample_trajectory(const ProductSimulator& sim, const ProductStructure& structure,
                             const SoftPolicy& policy, int start, int max_len, Rng& rng) {
    Trajectory t;
    t.start = start;
    t.final_state = start;
    int state = start;
    for (int i = 0; i < max_len; ++i) {
        if (structure.is_accepting(state)) {
            t.terminated = Termination::accepting;
            return t;
        }
        if (structure.is_absorbing(state)) {
            t.terminated = Termination::sink;
            return t;
        }
        int action = sample_action(policy.dist[static_cast<std::size_t>(state)], rng);
        auto step = sim.sample_step(state, action, rng);
        t.steps.push_back({state, action, step.reward});
        state = step.next_state;
        t.final_state = state;
    }
    if (structure.is_accepting(state)) {
        t.terminated = Termination::accepting;
    } else if (structure.is_absorbing(state)) {
        t.terminated = Termination::sink;
    } else {
        t.terminated = Termination::length_cap;
    }
    return t;
}

RolloutStats simulate_policy(const ProductSimulator& sim, const ProductStructure& structure,
                             const SoftPolicy& policy, int start, long long n_runs, int step_cap,
                             std::uint64_t seed) {
    if (step_cap < 1) throw ValidationError("step cap must be at least 1");
    RolloutStats stats;
    stats.n_runs = n_runs;
    for (long long run = 0; run < n_runs; ++run) {
        Rng rng(derive_seed(seed, kStreamRollout, static_cast<std::uint64_t>(run)));
        Trajectory t = sample_trajectory(sim, structure, policy, start, step_cap, rng);
        switch (t.terminated) {
            case Termination::accepting: ++stats.successes; break;
            case Termination::sink: ++stats.failures_sink; break;
            case Termination::length_cap: ++stats.failures_timeout; break;
        }
    }
    stats.success_rate = n_runs > 0 ? static_cast<double>(stats.successes) / static_cast<double>(n_runs) : 0.0;
    return stats;
}

}  // namespace topoplan
