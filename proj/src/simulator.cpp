#include "topoplan/simulator.hpp"

#include <algorithm>
#include <map>

#include "topoplan/errors.hpp"

namespace topoplan {

SnapshotSimulator::SnapshotSimulator(const ProductMdp& p) {
    rows_.resize(static_cast<std::size_t>(p.n_states()));
    rewards_.resize(static_cast<std::size_t>(p.n_states()));
    for (int sq = 0; sq < p.n_states(); ++sq) {
        rows_[static_cast<std::size_t>(sq)].resize(static_cast<std::size_t>(p.n_actions()));
        rewards_[static_cast<std::size_t>(sq)].assign(static_cast<std::size_t>(p.n_actions()), 0.0);
        for (int a = 0; a < p.n_actions(); ++a) {
            if (!p.action_available(sq, a)) continue;
            rows_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)] = p.transitions(sq, a);
            rewards_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)] = p.reward(sq, a);
        }
    }
}

bool SnapshotSimulator::action_available(int state, int action) const {
    return !rows_[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)].empty();
}

ProductSimulator::Step SnapshotSimulator::sample_step(int state, int action, Rng& rng) const {
    const auto& row = rows_[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)];
    if (row.empty()) throw ValidationError("simulator: action unavailable");
    double u = rng.uniform01();
    double cum = 0;
    int next = row.back().state;
    for (const Outcome& o : row) {
        cum += o.prob;
        if (u < cum) {
            next = o.state;
            break;
        }
    }
    return {next, rewards_[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)]};
}

ProductStructure extract_structure(const ProductMdp& p) {
    ProductStructure s;
    s.n_states = p.n_states();
    s.n_mdp_states = p.n_mdp_states();
    s.n_modes = p.n_modes();
    s.n_actions = p.n_actions();
    s.initial = p.initial();
    s.gamma = p.gamma();
    s.tau = p.tau();
    s.accepting = p.accepting_flags();
    s.absorbing = p.absorbing_flags();
    s.mdp_state_of.resize(static_cast<std::size_t>(s.n_states));
    s.mode_of.resize(static_cast<std::size_t>(s.n_states));
    for (int sq = 0; sq < s.n_states; ++sq) {
        s.mdp_state_of[static_cast<std::size_t>(sq)] = p.mdp_state_of(sq);
        s.mode_of[static_cast<std::size_t>(sq)] = p.mode_of(sq);
    }
    s.pair_index.assign(static_cast<std::size_t>(s.n_mdp_states) * static_cast<std::size_t>(s.n_modes), -1);
    for (int sq = 0; sq < s.n_states; ++sq) {
        s.pair_index[static_cast<std::size_t>(s.mode_of[static_cast<std::size_t>(sq)]) *
                         static_cast<std::size_t>(s.n_mdp_states) +
                     static_cast<std::size_t>(s.mdp_state_of[static_cast<std::size_t>(sq)])] = sq;
    }
    return s;
}

EmpiricalModel::EmpiricalModel(const ProductSimulator& sim, int n_actions, std::uint64_t seed,
                               int samples_per_pair)
    : sim_(&sim), n_actions_(n_actions), seed_(seed), samples_(samples_per_pair) {
    if (samples_ <= 0) throw ValidationError("empirical model needs a positive sample count");
}

const EmpiricalModel::CacheEntry& EmpiricalModel::ensure(int state, int action) const {
    long long key = static_cast<long long>(state) * n_actions_ + action;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    Rng rng(derive_seed(seed_, kStreamModel, static_cast<std::uint64_t>(key)));
    std::map<int, int> counts;
    for (int i = 0; i < samples_; ++i) {
        auto step = sim_->sample_step(state, action, rng);
        ++counts[step.next_state];
        ++step_calls_;
    }
    CacheEntry entry;
    for (auto [next, count] : counts) {
        entry.outcomes.push_back({next, static_cast<double>(count) / samples_});
    }
    return cache_.emplace(key, std::move(entry)).first->second;
}

const std::vector<Outcome>& EmpiricalModel::row(int state, int action) const {
    return ensure(state, action).outcomes;
}

}  // namespace topoplan
