#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "topoplan/product.hpp"
#include "topoplan/rng.hpp"

namespace topoplan {

// Blackbox generative interface to the product dynamics: callers may only
// request sampled steps. Model-free solvers see the environment exclusively
// through this and through structural metadata (ProductStructure).
class ProductSimulator {
public:
    virtual ~ProductSimulator() = default;

    struct Step {
        int next_state = 0;
        double reward = 0.0;
    };

    virtual Step sample_step(int state, int action, Rng& rng) const = 0;
    virtual bool action_available(int state, int action) const = 0;
};

// Simulator backed by a private snapshot of the dynamics taken at
// construction; later reads of the source product are not needed, so an
// attached read probe stays silent during simulation.
class SnapshotSimulator final : public ProductSimulator {
public:
    explicit SnapshotSimulator(const ProductMdp& p);

    Step sample_step(int state, int action, Rng& rng) const override;
    bool action_available(int state, int action) const override;

private:
    std::vector<std::vector<std::vector<Outcome>>> rows_;
    std::vector<std::vector<double>> rewards_;
};

// Transition-free view of a product: everything a model-free solver may know
// about the state space.
struct ProductStructure {
    int n_states = 0;
    int n_mdp_states = 0;
    int n_modes = 0;
    int n_actions = 0;
    int initial = 0;
    double gamma = 0.9;
    double tau = 2.0;
    std::vector<char> accepting;
    std::vector<char> absorbing;
    std::vector<int> mdp_state_of;
    std::vector<int> mode_of;
    std::vector<int> pair_index;  // (q * n_mdp_states + s) -> product index or -1

    int index_of(int s, int q) const {
        return pair_index[static_cast<std::size_t>(q) * static_cast<std::size_t>(n_mdp_states) +
                          static_cast<std::size_t>(s)];
    }
    bool is_accepting(int sq) const { return accepting[static_cast<std::size_t>(sq)] != 0; }
    bool is_absorbing(int sq) const { return absorbing[static_cast<std::size_t>(sq)] != 0; }
};

ProductStructure extract_structure(const ProductMdp& p);

// Per-(state, action) empirical next-state distributions estimated from the
// simulator. Each cell uses its own RNG stream derived from (seed, state,
// action), so lazily built caches are independent of build order.
class EmpiricalModel {
public:
    EmpiricalModel(const ProductSimulator& sim, int n_actions, std::uint64_t seed, int samples_per_pair);

    // Empirical distribution for (state, action); built on first use.
    const std::vector<Outcome>& row(int state, int action) const;

    bool action_available(int state, int action) const { return sim_->action_available(state, action); }

    long long step_calls() const { return step_calls_; }

private:
    struct CacheEntry {
        std::vector<Outcome> outcomes;
    };
    const CacheEntry& ensure(int state, int action) const;

    const ProductSimulator* sim_;
    int n_actions_;
    std::uint64_t seed_;
    int samples_;
    mutable std::unordered_map<long long, CacheEntry> cache_;
    mutable long long step_calls_ = 0;
};

}  // namespace topoplan
