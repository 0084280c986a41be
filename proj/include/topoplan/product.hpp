#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "topoplan/dfa.hpp"
#include "topoplan/mdp.hpp"

namespace topoplan {

struct ProductOptions {
    double gamma = 0.9;
    double tau = 2.0;
    bool prune_unreachable = false;
};

// Synchronous product of a labeled MDP and a task DFA. The mode component is
// advanced with the label of the state being entered: q' = delta(q, L(s')).
// States in S x F are absorbing with zero reward; elsewhere the reward of
// ((s,q),a) is the one-step probability of entering S x F.
//
// Transition rows and rewards are reachable only through accessors so that
// model-free code paths can be audited: attach_read_probe installs a counter
// bumped on every transitions()/reward() call.
class ProductMdp {
public:
    ProductMdp() = default;

    int n_states() const { return static_cast<int>(rows_.size()); }
    int n_mdp_states() const { return n_mdp_states_; }
    int n_modes() const { return n_modes_; }
    int n_actions() const { return n_actions_; }
    double gamma() const { return gamma_; }
    double tau() const { return tau_; }
    int initial() const { return initial_; }

    bool is_accepting(int sq) const { return accepting_[static_cast<std::size_t>(sq)] != 0; }
    // Absorbing under every available action (accepting states, obstacle cells, ...).
    bool is_absorbing(int sq) const { return absorbing_[static_cast<std::size_t>(sq)] != 0; }
    const std::vector<char>& accepting_flags() const { return accepting_; }
    const std::vector<char>& absorbing_flags() const { return absorbing_; }

    int mdp_state_of(int sq) const { return mdp_state_[static_cast<std::size_t>(sq)]; }
    int mode_of(int sq) const { return mode_[static_cast<std::size_t>(sq)]; }
    // Index of (s, q), or -1 if that pair was pruned.
    int index_of(int s, int q) const;

    bool action_available(int sq, int a) const {
        return !rows_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)].empty();
    }
    int available_action_count(int sq) const;

    const std::vector<Outcome>& transitions(int sq, int a) const;
    double reward(int sq, int a) const;

    std::string state_name(int sq) const;

    // Counts accesses to transitions()/reward(); pass nullptr to detach.
    void attach_read_probe(std::atomic<long long>* probe) const { read_probe_ = probe; }

    const std::vector<std::string>& warnings() const { return warnings_; }

    friend ProductMdp build_product(const LabeledMdp&, const TaskDfa&, const ProductOptions&);

private:
    int n_mdp_states_ = 0;
    int n_modes_ = 0;
    int n_actions_ = 0;
    double gamma_ = 0.9;
    double tau_ = 2.0;
    int initial_ = 0;
    std::vector<char> accepting_;
    std::vector<char> absorbing_;
    std::vector<int> mdp_state_;
    std::vector<int> mode_;
    std::vector<int> pair_index_;   // (q * n_mdp_states + s) -> product index or -1
    std::vector<std::vector<std::vector<Outcome>>> rows_;
    std::vector<std::vector<double>> rewards_;
    std::vector<std::string> state_names_;
    std::vector<std::string> warnings_;
    mutable std::atomic<long long>* read_probe_ = nullptr;
};

ProductMdp build_product(const LabeledMdp& m, const TaskDfa& dfa, const ProductOptions& options = {});

// Accessor mirroring the stored reward table.
inline double product_reward(const ProductMdp& p, int sq, int a) { return p.reward(sq, a); }

// Sparse text dump (states, rows, rewards) for oracle cross-checks.
void dump_product(const ProductMdp& p, std::ostream& out);

}  // namespace topoplan
