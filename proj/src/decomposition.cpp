#include "topoplan/decomposition.hpp"

#include <algorithm>
#include <deque>

#include "topoplan/errors.hpp"

namespace topoplan {

namespace {

// Per MDP state, the symbol it presents to the DFA.
std::vector<PropMask> dfa_symbols(const LabeledMdp& m, const TaskDfa& dfa) {
    std::vector<PropMask> symbol(static_cast<std::size_t>(m.n_states));
    for (int s = 0; s < m.n_states; ++s) {
        symbol[static_cast<std::size_t>(s)] =
            m.props.project(m.labels[static_cast<std::size_t>(s)], dfa.props);
    }
    return symbol;
}

void check_mode(const TaskDfa& dfa, int q) {
    if (q < 0 || q >= dfa.mode_count()) {
        throw ValidationError("unknown mode index " + std::to_string(q));
    }
}

}  // namespace

std::vector<int> guard_set(const LabeledMdp& m, const TaskDfa& dfa, int q, int q2) {
    check_mode(dfa, q);
    check_mode(dfa, q2);
    if (q == q2) throw ValidationError("guard_set requires distinct modes");
    auto symbol = dfa_symbols(m, dfa);
    std::vector<int> out;
    for (int s = 0; s < m.n_states; ++s) {
        bool hit = false;
        for (int a = 0; a < m.n_actions && !hit; ++a) {
            if (!m.action_available(s, a)) continue;
            for (const Outcome& o : m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
                if (o.prob > 0 && dfa.step(q, symbol[static_cast<std::size_t>(o.state)]) == q2) {
                    hit = true;
                    break;
                }
            }
        }
        if (hit) out.push_back(s);
    }
    return out;
}

std::vector<int> invariant_set(const LabeledMdp& m, const TaskDfa& dfa, int q) {
    check_mode(dfa, q);
    auto symbol = dfa_symbols(m, dfa);
    std::vector<int> out;
    for (int s = 0; s < m.n_states; ++s) {
        bool stays = true;
        for (int a = 0; a < m.n_actions && stays; ++a) {
            if (!m.action_available(s, a)) continue;
            for (const Outcome& o : m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
                if (o.prob > 0 && dfa.step(q, symbol[static_cast<std::size_t>(o.state)]) != q) {
                    stays = false;
                    break;
                }
            }
        }
        if (stays) out.push_back(s);
    }
    return out;
}

Digraph mode_dependency_graph(const LabeledMdp& m, const TaskDfa& dfa) {
    auto symbol = dfa_symbols(m, dfa);
    const int n = dfa.mode_count();
    // reachable successor modes per mode, over one stochastic step
    std::vector<std::vector<char>> hits(static_cast<std::size_t>(n),
                                        std::vector<char>(static_cast<std::size_t>(n), 0));
    for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a) {
            if (!m.action_available(s, a)) continue;
            for (const Outcome& o : m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
                if (o.prob <= 0) continue;
                PropMask sym = symbol[static_cast<std::size_t>(o.state)];
                for (int q = 0; q < n; ++q) {
                    hits[static_cast<std::size_t>(q)][static_cast<std::size_t>(dfa.step(q, sym))] = 1;
                }
            }
        }
    }
    Digraph g(n);
    for (int q = 0; q < n; ++q) {
        // accepting product states are absorbing, so no product transition
        // ever leaves an accepting mode; its raw guard sets are fictitious
        if (dfa.is_accepting(q)) continue;
        for (int q2 = 0; q2 < n; ++q2) {
            if (q != q2 && hits[static_cast<std::size_t>(q)][static_cast<std::size_t>(q2)]) {
                g.add_edge(q, q2);
            }
        }
    }
    return g;
}

LevelSets compute_level_sets(const Digraph& meta_dependency, const std::vector<char>& contains_accepting) {
    const int n = meta_dependency.n;
    LevelSets out;
    out.level_of.assign(static_cast<std::size_t>(n), -1);

    // Coaccessible = can reach an accepting meta-mode in the dependency DAG.
    std::vector<char> coaccessible(static_cast<std::size_t>(n), 0);
    {
        Digraph rev = meta_dependency.reversed();
        std::deque<int> frontier;
        for (int x = 0; x < n; ++x) {
            if (contains_accepting[static_cast<std::size_t>(x)]) {
                coaccessible[static_cast<std::size_t>(x)] = 1;
                frontier.push_back(x);
            }
        }
        while (!frontier.empty()) {
            int x = frontier.front();
            frontier.pop_front();
            for (int y : rev.adj[static_cast<std::size_t>(x)]) {
                if (!coaccessible[static_cast<std::size_t>(y)]) {
                    coaccessible[static_cast<std::size_t>(y)] = 1;
                    frontier.push_back(y);
                }
            }
        }
    }
    for (int x = 0; x < n; ++x) {
        if (!coaccessible[static_cast<std::size_t>(x)]) out.dropped.push_back(x);
    }

    // L0: meta-modes containing accepting modes.
    std::vector<int> current;
    for (int x = 0; x < n; ++x) {
        if (contains_accepting[static_cast<std::size_t>(x)]) {
            out.level_of[static_cast<std::size_t>(x)] = 0;
            current.push_back(x);
        }
    }
    if (current.empty()) return out;
    out.levels.push_back(current);

    auto resolved = [&](int y, const std::vector<char>& candidate) {
        // A dependency is satisfied if already leveled, dropped (its states
        // cannot progress and are pinned), or admitted in the same round.
        return out.level_of[static_cast<std::size_t>(y)] >= 0 ||
               !coaccessible[static_cast<std::size_t>(y)] || candidate[static_cast<std::size_t>(y)] != 0;
    };

    int level = 1;
    while (true) {
        const std::vector<int>& previous = out.levels.back();
        // base rule: unleveled meta-modes with a dependency into the previous level
        std::vector<char> candidate(static_cast<std::size_t>(n), 0);
        std::vector<int> pool;
        for (int x = 0; x < n; ++x) {
            if (out.level_of[static_cast<std::size_t>(x)] >= 0 || !coaccessible[static_cast<std::size_t>(x)]) {
                continue;
            }
            for (int y : meta_dependency.adj[static_cast<std::size_t>(x)]) {
                if (out.level_of[static_cast<std::size_t>(y)] == level - 1 &&
                    std::find(previous.begin(), previous.end(), y) != previous.end()) {
                    candidate[static_cast<std::size_t>(x)] = 1;
                    pool.push_back(x);
                    break;
                }
            }
        }
        // Defer candidates whose dependencies are not yet resolved, to fixpoint.
        bool changed = true;
        while (changed) {
            changed = false;
            for (int x : pool) {
                if (!candidate[static_cast<std::size_t>(x)]) continue;
                for (int y : meta_dependency.adj[static_cast<std::size_t>(x)]) {
                    if (!resolved(y, candidate)) {
                        candidate[static_cast<std::size_t>(x)] = 0;
                        changed = true;
                        break;
                    }
                }
            }
        }
        std::vector<int> admitted;
        for (int x : pool) {
            if (candidate[static_cast<std::size_t>(x)]) admitted.push_back(x);
        }
        if (admitted.empty()) break;
        for (int x : admitted) out.level_of[static_cast<std::size_t>(x)] = level;
        std::sort(admitted.begin(), admitted.end());
        out.levels.push_back(std::move(admitted));
        ++level;
    }
    for (int x = 0; x < n; ++x) {
        if (coaccessible[static_cast<std::size_t>(x)] && out.level_of[static_cast<std::size_t>(x)] < 0) {
            throw SolverError("level construction left a coaccessible meta-mode unleveled");
        }
    }
    return out;
}

const std::vector<int>& Decomposition::guard(int q, int q2) const {
    static const std::vector<int> empty;
    auto it = guards.find({q, q2});
    return it == guards.end() ? empty : it->second;
}

Decomposition decompose(const LabeledMdp& m, const TaskDfa& dfa) {
    Decomposition d;
    d.dfa = coaccessible_trim(dfa).dfa;

    const int n = d.dfa.mode_count();
    d.mode_graph = mode_dependency_graph(m, d.dfa);
    for (int q = 0; q < n; ++q) {
        for (int q2 : d.mode_graph.adj[static_cast<std::size_t>(q)]) {
            d.guards[{q, q2}] = guard_set(m, d.dfa, q, q2);
        }
        d.invariants.push_back(invariant_set(m, d.dfa, q));
    }

    SccPartition scc = kosaraju_scc(d.mode_graph);
    d.meta_modes = scc.components;
    // deterministic ordering: by smallest member mode
    std::sort(d.meta_modes.begin(), d.meta_modes.end());
    d.meta_of.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < d.meta_modes.size(); ++i) {
        for (int q : d.meta_modes[i]) d.meta_of[static_cast<std::size_t>(q)] = static_cast<int>(i);
    }
    const int n_meta = static_cast<int>(d.meta_modes.size());
    d.meta_graph = Digraph(n_meta);
    for (int q = 0; q < n; ++q) {
        int x = d.meta_of[static_cast<std::size_t>(q)];
        for (int q2 : d.mode_graph.adj[static_cast<std::size_t>(q)]) {
            int y = d.meta_of[static_cast<std::size_t>(q2)];
            if (x != y && !d.meta_graph.has_edge(x, y)) d.meta_graph.add_edge(x, y);
        }
    }

    std::vector<char> contains_accepting(static_cast<std::size_t>(n_meta), 0);
    for (int x = 0; x < n_meta; ++x) {
        for (int q : d.meta_modes[static_cast<std::size_t>(x)]) {
            if (d.dfa.is_accepting(q)) contains_accepting[static_cast<std::size_t>(x)] = 1;
        }
    }

    LevelSets ls = compute_level_sets(d.meta_graph, contains_accepting);
    d.levels = ls.levels;
    d.level_of_meta = ls.level_of;
    for (int x : ls.dropped) {
        for (int q : d.meta_modes[static_cast<std::size_t>(x)]) d.dropped_modes.push_back(q);
    }
    std::sort(d.dropped_modes.begin(), d.dropped_modes.end());

    if (d.level_of_mode(d.dfa.initial) < 0) {
        throw UnsatisfiableTaskError("initial mode cannot reach the accepting set through the MDP");
    }
    return d;
}

}  // namespace topoplan
