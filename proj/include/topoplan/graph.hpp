#pragma once

#include <vector>

namespace topoplan {

struct Digraph {
    int n = 0;
    std::vector<std::vector<int>> adj;

    Digraph() = default;
    explicit Digraph(int nodes) : n(nodes), adj(static_cast<std::size_t>(nodes)) {}

    void add_edge(int u, int v) { adj[static_cast<std::size_t>(u)].push_back(v); }
    bool has_edge(int u, int v) const;
    Digraph reversed() const;
};

struct SccPartition {
    int count = 0;
    std::vector<int> component_of;           // per node
    std::vector<std::vector<int>> components; // members sorted ascending
};

// Kosaraju's two-pass algorithm: forward DFS for finish order, reverse DFS in
// decreasing finish order to peel components.
SccPartition kosaraju_scc(const Digraph& g);

// Condensation DAG over components (no self loops, deduplicated edges).
Digraph condensation(const Digraph& g, const SccPartition& scc);

// Reverse-topological component ids: sinks of the condensation get 1 and
// id(X) = 1 + max id over X's successors, so a larger id always depends on
// smaller ones and components sharing an id are causally independent.
std::vector<int> topological_ids(const Digraph& g, const SccPartition& scc);

// Same, restricted to components reachable from `root`'s component.
// Unreachable components carry no ordering obligation for planning from the
// root and are reported in the first batch (id 1).
std::vector<int> topological_ids(const Digraph& g, const SccPartition& scc, int root);

}  // namespace topoplan
