#pragma once

#include <map>
#include <utility>
#include <vector>

#include "topoplan/dfa.hpp"
#include "topoplan/graph.hpp"
#include "topoplan/mdp.hpp"

namespace topoplan {

// MDP states from which some action can trigger the mode transition q -> q2,
// i.e. { s : exists a, s' with P(s'|s,a) > 0 and delta(q, L(s')) = q2 }.
std::vector<int> guard_set(const LabeledMdp& m, const TaskDfa& dfa, int q, int q2);

// MDP states that keep the mode at q with probability one under every action.
std::vector<int> invariant_set(const LabeledMdp& m, const TaskDfa& dfa, int q);

// Edge q -> q' (q != q') iff guard_set(q, q') is nonempty.
Digraph mode_dependency_graph(const LabeledMdp& m, const TaskDfa& dfa);

struct LevelSets {
    std::vector<std::vector<int>> levels;  // level -> meta-mode indices, ascending
    std::vector<int> level_of;             // meta-mode -> level, -1 if dropped
    std::vector<int> dropped;              // meta-modes in no level
};

// Level sets over meta-modes: L0 holds every meta-mode containing an
// accepting mode; L_{i} collects the remaining meta-modes with a dependency
// into L_{i-1}. A candidate is deferred while any of its dependencies is
// still unleveled outside the current candidate set, so that solving levels
// in order never reads an unsolved successor. Meta-modes with no path to L0
// are reported as dropped.
LevelSets compute_level_sets(const Digraph& meta_dependency, const std::vector<char>& contains_accepting);

struct Decomposition {
    // Trimmed automaton the decomposition refers to.
    TaskDfa dfa;
    Digraph mode_graph;                        // dependency over modes
    std::vector<std::vector<int>> meta_modes;  // partition of coaccessible-trimmed Q
    std::vector<int> meta_of;                  // mode -> meta-mode index
    Digraph meta_graph;                        // condensation of mode_graph
    std::vector<std::vector<int>> levels;      // backup order: process index 0 first
    std::vector<int> level_of_meta;            // -1 for dropped meta-modes
    std::vector<int> dropped_modes;            // modes in no level
    std::map<std::pair<int, int>, std::vector<int>> guards;  // (q,q') -> states
    std::vector<std::vector<int>> invariants;  // mode -> states

    int level_of_mode(int q) const {
        int meta = meta_of[static_cast<std::size_t>(q)];
        return meta < 0 ? -1 : level_of_meta[static_cast<std::size_t>(meta)];
    }
    const std::vector<int>& guard(int q, int q2) const;
};

// trim -> guard/invariant sets -> dependency graph -> SCC -> level sets.
// Throws UnsatisfiableTaskError when the initial mode drops out.
Decomposition decompose(const LabeledMdp& m, const TaskDfa& dfa);

}  // namespace topoplan
