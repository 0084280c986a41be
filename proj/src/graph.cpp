#include "topoplan/graph.hpp"

#include <algorithm>
#include <deque>

namespace topoplan {

bool Digraph::has_edge(int u, int v) const {
    const auto& row = adj[static_cast<std::size_t>(u)];
    return std::find(row.begin(), row.end(), v) != row.end();
}

Digraph Digraph::reversed() const {
    Digraph r(n);
    for (int u = 0; u < n; ++u) {
        for (int v : adj[static_cast<std::size_t>(u)]) r.add_edge(v, u);
    }
    return r;
}

SccPartition kosaraju_scc(const Digraph& g) {
    const int n = g.n;
    std::vector<int> finish_order;
    finish_order.reserve(static_cast<std::size_t>(n));
    std::vector<char> seen(static_cast<std::size_t>(n), 0);

    // iterative DFS, pushing nodes in finish order
    std::vector<std::pair<int, std::size_t>> stack;
    for (int start = 0; start < n; ++start) {
        if (seen[static_cast<std::size_t>(start)]) continue;
        seen[static_cast<std::size_t>(start)] = 1;
        stack.emplace_back(start, 0);
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            const auto& row = g.adj[static_cast<std::size_t>(u)];
            if (next < row.size()) {
                int v = row[next++];
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                finish_order.push_back(u);
                stack.pop_back();
            }
        }
    }

    Digraph rev = g.reversed();
    SccPartition scc;
    scc.component_of.assign(static_cast<std::size_t>(n), -1);
    for (auto it = finish_order.rbegin(); it != finish_order.rend(); ++it) {
        if (scc.component_of[static_cast<std::size_t>(*it)] != -1) continue;
        int comp = scc.count++;
        std::vector<int> members;
        std::deque<int> frontier{*it};
        scc.component_of[static_cast<std::size_t>(*it)] = comp;
        while (!frontier.empty()) {
            int u = frontier.front();
            frontier.pop_front();
            members.push_back(u);
            for (int v : rev.adj[static_cast<std::size_t>(u)]) {
                if (scc.component_of[static_cast<std::size_t>(v)] == -1) {
                    scc.component_of[static_cast<std::size_t>(v)] = comp;
                    frontier.push_back(v);
                }
            }
        }
        std::sort(members.begin(), members.end());
        scc.components.push_back(std::move(members));
    }
    return scc;
}

Digraph condensation(const Digraph& g, const SccPartition& scc) {
    Digraph c(scc.count);
    for (int u = 0; u < g.n; ++u) {
        int cu = scc.component_of[static_cast<std::size_t>(u)];
        for (int v : g.adj[static_cast<std::size_t>(u)]) {
            int cv = scc.component_of[static_cast<std::size_t>(v)];
            if (cu != cv && !c.has_edge(cu, cv)) c.add_edge(cu, cv);
        }
    }
    return c;
}

namespace {

std::vector<int> ids_over(const Digraph& cond, const std::vector<char>& in_scope) {
    // id = 1 + longest path to a sink, restricted to in-scope components;
    // out-of-scope components get 1.
    const int n = cond.n;
    std::vector<int> ids(static_cast<std::size_t>(n), 1);
    std::vector<char> done(static_cast<std::size_t>(n), 0);

    // The condensation is a DAG; resolve by memoized depth-first walk.
    std::vector<std::pair<int, std::size_t>> stack;
    for (int start = 0; start < n; ++start) {
        if (!in_scope[static_cast<std::size_t>(start)] || done[static_cast<std::size_t>(start)]) continue;
        stack.emplace_back(start, 0);
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            const auto& row = cond.adj[static_cast<std::size_t>(u)];
            bool descended = false;
            while (next < row.size()) {
                int v = row[next++];
                if (in_scope[static_cast<std::size_t>(v)] && !done[static_cast<std::size_t>(v)]) {
                    stack.emplace_back(v, 0);
                    descended = true;
                    break;
                }
            }
            if (descended) continue;
            if (next >= row.size()) {
                int best = 0;
                for (int v : row) {
                    if (in_scope[static_cast<std::size_t>(v)]) {
                        best = std::max(best, ids[static_cast<std::size_t>(v)]);
                    }
                }
                ids[static_cast<std::size_t>(u)] = best + 1;
                done[static_cast<std::size_t>(u)] = 1;
                stack.pop_back();
            }
        }
    }
    return ids;
}

}  // namespace

std::vector<int> topological_ids(const Digraph& g, const SccPartition& scc) {
    Digraph cond = condensation(g, scc);
    std::vector<char> all(static_cast<std::size_t>(scc.count), 1);
    return ids_over(cond, all);
}

std::vector<int> topological_ids(const Digraph& g, const SccPartition& scc, int root) {
    Digraph cond = condensation(g, scc);
    std::vector<char> reachable(static_cast<std::size_t>(scc.count), 0);
    std::deque<int> frontier{scc.component_of[static_cast<std::size_t>(root)]};
    reachable[static_cast<std::size_t>(frontier.front())] = 1;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop_front();
        for (int v : cond.adj[static_cast<std::size_t>(u)]) {
            if (!reachable[static_cast<std::size_t>(v)]) {
                reachable[static_cast<std::size_t>(v)] = 1;
                frontier.push_back(v);
            }
        }
    }
    return ids_over(cond, reachable);
}

}  // namespace topoplan
