#include "topoplan/product.hpp"

#include <deque>
#include <ostream>

#include "topoplan/errors.hpp"

namespace topoplan {

int ProductMdp::index_of(int s, int q) const {
    if (s < 0 || s >= n_mdp_states_ || q < 0 || q >= n_modes_) {
        throw ValidationError("product index_of: pair out of range");
    }
    return pair_index_[static_cast<std::size_t>(q) * static_cast<std::size_t>(n_mdp_states_) +
                       static_cast<std::size_t>(s)];
}

int ProductMdp::available_action_count(int sq) const {
    int n = 0;
    for (int a = 0; a < n_actions_; ++a) {
        if (action_available(sq, a)) ++n;
    }
    return n;
}

const std::vector<Outcome>& ProductMdp::transitions(int sq, int a) const {
    if (read_probe_) ++*read_probe_;
    if (sq < 0 || sq >= n_states()) throw ValidationError("unknown product state " + std::to_string(sq));
    if (a < 0 || a >= n_actions_) throw ValidationError("unknown action " + std::to_string(a));
    const auto& row = rows_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)];
    if (row.empty()) throw ValidationError("action unavailable at product state " + state_name(sq));
    return row;
}

double ProductMdp::reward(int sq, int a) const {
    if (read_probe_) ++*read_probe_;
    if (sq < 0 || sq >= n_states()) throw ValidationError("unknown product state " + std::to_string(sq));
    if (a < 0 || a >= n_actions_) throw ValidationError("unknown action " + std::to_string(a));
    if (rows_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)].empty()) {
        throw ValidationError("action unavailable at product state " + state_name(sq));
    }
    return rewards_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)];
}

std::string ProductMdp::state_name(int sq) const {
    return state_names_[static_cast<std::size_t>(sq)];
}

ProductMdp build_product(const LabeledMdp& m, const TaskDfa& dfa, const ProductOptions& options) {
    if (!(options.gamma > 0.0 && options.gamma < 1.0)) {
        throw ValidationError("gamma must lie in (0,1)");
    }
    if (!(options.tau > 0.0)) throw ValidationError("tau must be positive");
    if (!m.props.includes(dfa.props)) {
        throw ValidationError("DFA propositions are not a subset of the MDP's");
    }
    {
        auto violations = validate_mdp(m);
        if (!violations.empty()) throw ValidationError("invalid MDP: " + violations.front());
    }

    ProductMdp p;
    p.n_mdp_states_ = m.n_states;
    p.n_modes_ = dfa.mode_count();
    p.n_actions_ = m.n_actions;
    p.gamma_ = options.gamma;
    p.tau_ = options.tau;

    if (coaccessible_modes(dfa).size() != static_cast<std::size_t>(dfa.mode_count())) {
        p.warnings_.push_back("DFA is not coaccessible-trimmed; dead modes will inflate the product");
    }

    // Per MDP state, the DFA-facing symbol.
    std::vector<PropMask> symbol(static_cast<std::size_t>(m.n_states));
    for (int s = 0; s < m.n_states; ++s) {
        symbol[static_cast<std::size_t>(s)] =
            m.props.project(m.labels[static_cast<std::size_t>(s)], dfa.props);
    }

    const std::size_t n_pairs =
        static_cast<std::size_t>(m.n_states) * static_cast<std::size_t>(dfa.mode_count());
    auto pair_of = [&](int s, int q) {
        return static_cast<std::size_t>(q) * static_cast<std::size_t>(m.n_states) +
               static_cast<std::size_t>(s);
    };

    int initial_mode = dfa.step(dfa.initial, symbol[static_cast<std::size_t>(m.initial)]);

    std::vector<char> keep(n_pairs, 1);
    if (options.prune_unreachable) {
        keep.assign(n_pairs, 0);
        std::deque<std::pair<int, int>> frontier;
        keep[pair_of(m.initial, initial_mode)] = 1;
        frontier.emplace_back(m.initial, initial_mode);
        while (!frontier.empty()) {
            auto [s, q] = frontier.front();
            frontier.pop_front();
            if (dfa.is_accepting(q)) continue;  // absorbing
            for (int a = 0; a < m.n_actions; ++a) {
                if (!m.action_available(s, a)) continue;
                for (const Outcome& o : m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
                    int q2 = dfa.step(q, symbol[static_cast<std::size_t>(o.state)]);
                    if (!keep[pair_of(o.state, q2)]) {
                        keep[pair_of(o.state, q2)] = 1;
                        frontier.emplace_back(o.state, q2);
                    }
                }
            }
        }
    }

    p.pair_index_.assign(n_pairs, -1);
    // mode-major indexing keeps the Gauss-Seidel sweep order lexicographic in (q, s)
    for (int q = 0; q < dfa.mode_count(); ++q) {
        for (int s = 0; s < m.n_states; ++s) {
            if (!keep[pair_of(s, q)]) continue;
            p.pair_index_[pair_of(s, q)] = static_cast<int>(p.mdp_state_.size());
            p.mdp_state_.push_back(s);
            p.mode_.push_back(q);
        }
    }

    const int n = static_cast<int>(p.mdp_state_.size());
    p.initial_ = p.pair_index_[pair_of(m.initial, initial_mode)];
    p.accepting_.assign(static_cast<std::size_t>(n), 0);
    p.absorbing_.assign(static_cast<std::size_t>(n), 0);
    p.rows_.assign(static_cast<std::size_t>(n),
                   std::vector<std::vector<Outcome>>(static_cast<std::size_t>(m.n_actions)));
    p.rewards_.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m.n_actions), 0.0));
    p.state_names_.resize(static_cast<std::size_t>(n));

    for (int sq = 0; sq < n; ++sq) {
        int s = p.mdp_state_[static_cast<std::size_t>(sq)];
        int q = p.mode_[static_cast<std::size_t>(sq)];
        p.state_names_[static_cast<std::size_t>(sq)] =
            "(" + m.state_name(s) + "," + dfa.modes[static_cast<std::size_t>(q)] + ")";
        bool acc = dfa.is_accepting(q);
        p.accepting_[static_cast<std::size_t>(sq)] = acc ? 1 : 0;

        bool absorbing = true;
        for (int a = 0; a < m.n_actions; ++a) {
            if (!m.action_available(s, a)) continue;
            auto& row = p.rows_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)];
            if (acc) {
                row = {{sq, 1.0}};
                continue;
            }
            double reward = 0.0;
            for (const Outcome& o : m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
                int q2 = dfa.step(q, symbol[static_cast<std::size_t>(o.state)]);
                int target = p.pair_index_[pair_of(o.state, q2)];
                // with pruning, every positive-probability successor of a kept
                // state was visited by the reachability pass
                row.push_back({target, o.prob});
                if (dfa.is_accepting(q2)) reward += o.prob;
                if (target != sq) absorbing = false;
            }
            p.rewards_[static_cast<std::size_t>(sq)][static_cast<std::size_t>(a)] = reward;
        }
        if (acc) absorbing = true;
        p.absorbing_[static_cast<std::size_t>(sq)] = absorbing ? 1 : 0;
    }

    return p;
}

void dump_product(const ProductMdp& p, std::ostream& out) {
    out << "# product-mdp v1\n";
    out << "mdp_states " << p.n_mdp_states() << "\n";
    out << "modes " << p.n_modes() << "\n";
    out << "states " << p.n_states() << "\n";
    out << "actions " << p.n_actions() << "\n";
    out << "gamma " << p.gamma() << "\n";
    out << "tau " << p.tau() << "\n";
    out << "initial " << p.initial() << "\n";
    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) out << "accepting " << sq << "\n";
    }
    out.precision(17);
    for (int sq = 0; sq < p.n_states(); ++sq) {
        for (int a = 0; a < p.n_actions(); ++a) {
            if (!p.action_available(sq, a)) continue;
            out << "reward " << sq << " " << a << " " << p.reward(sq, a) << "\n";
            for (const Outcome& o : p.transitions(sq, a)) {
                out << "trans " << sq << " " << a << " " << o.state << " " << o.prob << "\n";
            }
        }
    }
}

}  // namespace topoplan
