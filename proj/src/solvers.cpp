#include "topoplan/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topoplan/errors.hpp"

namespace topoplan {

namespace {

double action_value(const ProductMdp& p, const std::vector<double>& values, int sq, int a,
                    double reward_scale) {
    double v = reward_scale * p.reward(sq, a);
    double exp_next = 0;
    for (const Outcome& o : p.transitions(sq, a)) {
        exp_next += o.prob * values[static_cast<std::size_t>(o.state)];
    }
    return v + p.gamma() * exp_next;
}

}  // namespace

double softmax_backup(const ProductMdp& p, const std::vector<double>& values, int sq,
                      double reward_scale) {
    const double tau = p.tau();
    double best = -std::numeric_limits<double>::infinity();
    double z[64];
    int n = 0;
    for (int a = 0; a < p.n_actions() && n < 64; ++a) {
        if (!p.action_available(sq, a)) continue;
        z[n] = action_value(p, values, sq, a, reward_scale);
        best = std::max(best, z[n]);
        ++n;
    }
    if (n == 0) throw ValidationError("softmax_backup: no available action");
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += std::exp((z[i] - best) / tau);
    return best + tau * std::log(sum);
}

double hardmax_backup(const ProductMdp& p, const std::vector<double>& values, int sq, bool minimize,
                      double reward_scale) {
    bool found = false;
    double best = 0;
    for (int a = 0; a < p.n_actions(); ++a) {
        if (!p.action_available(sq, a)) continue;
        double v = action_value(p, values, sq, a, reward_scale);
        if (!found || (minimize ? v < best : v > best)) {
            best = v;
            found = true;
        }
    }
    if (!found) throw ValidationError("hardmax_backup: no available action");
    return best;
}

double apply_backup(const ProductMdp& p, const std::vector<double>& values, int sq, BackupOperator op,
                    double reward_scale) {
    switch (op) {
        case BackupOperator::softmax: return softmax_backup(p, values, sq, reward_scale);
        case BackupOperator::hardmax_max: return hardmax_backup(p, values, sq, false, reward_scale);
        case BackupOperator::hardmax_min: return hardmax_backup(p, values, sq, true, reward_scale);
    }
    throw ValidationError("unknown backup operator");
}

std::vector<double> apply_backup_sweep(const ProductMdp& p, const std::vector<double>& values,
                                       BackupOperator op, double reward_scale) {
    std::vector<double> out(values.size());
    for (int sq = 0; sq < p.n_states(); ++sq) {
        out[static_cast<std::size_t>(sq)] = apply_backup(p, values, sq, op, reward_scale);
    }
    return out;
}

std::vector<double> default_initial_values(const ProductMdp& p, BackupOperator op,
                                           double accepting_value) {
    std::vector<double> init(static_cast<std::size_t>(p.n_states()), 0.0);
    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) {
            init[static_cast<std::size_t>(sq)] = accepting_value;
        } else if (op == BackupOperator::softmax) {
            init[static_cast<std::size_t>(sq)] =
                p.tau() * std::log(static_cast<double>(p.available_action_count(sq))) / (1.0 - p.gamma());
        }
    }
    return init;
}

ValueTable value_iteration(const ProductMdp& p, const SolveOptions& options) {
    if (!(options.epsilon > 0)) throw ValidationError("epsilon must be positive");

    ValueTable table;
    const std::size_t n = static_cast<std::size_t>(p.n_states());
    if (options.initial_values) {
        if (options.initial_values->size() != n) throw ValidationError("initial value table size mismatch");
        table.values = *options.initial_values;
    } else {
        table.values = default_initial_values(p, options.op, options.accepting_value);
    }

    std::vector<char> pinned(n, 0);
    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) {
            pinned[static_cast<std::size_t>(sq)] = 1;
            table.values[static_cast<std::size_t>(sq)] = options.accepting_value;
        }
    }
    for (const auto& [sq, v] : options.extra_pinned) {
        pinned[static_cast<std::size_t>(sq)] = 1;
        table.values[static_cast<std::size_t>(sq)] = v;
    }

    std::vector<int> sweep_states;
    if (options.restrict_states) {
        sweep_states = *options.restrict_states;
        std::sort(sweep_states.begin(), sweep_states.end());
        std::erase_if(sweep_states, [&](int sq) { return pinned[static_cast<std::size_t>(sq)] != 0; });
    } else {
        for (int sq = 0; sq < p.n_states(); ++sq) {
            if (!pinned[static_cast<std::size_t>(sq)]) sweep_states.push_back(sq);
        }
    }

    if (sweep_states.empty()) {
        table.converged = true;
        return table;
    }

    for (long long sweep = 0; sweep < options.max_sweeps; ++sweep) {
        double bellman_error = 0.0;
        for (int sq : sweep_states) {
            double old_v = table.values[static_cast<std::size_t>(sq)];
            double new_v = apply_backup(p, table.values, sq, options.op, options.reward_scale);
            table.values[static_cast<std::size_t>(sq)] = new_v;
            bellman_error = std::max(bellman_error, std::abs(new_v - old_v));
            ++table.backup_count;
        }
        ++table.sweeps;
        table.residual = bellman_error;
        if (bellman_error < options.epsilon) {
            table.converged = true;
            return table;
        }
    }
    // not converged within the sweep cap; residual reports the last sweep
    return table;
}

TviResult topological_value_iteration(const ProductMdp& p, const Decomposition& d,
                                      const SolveOptions& options) {
    if (d.dfa.mode_count() != p.n_modes()) {
        throw ValidationError("decomposition does not match the product's automaton");
    }

    TviResult result;
    const std::size_t n = static_cast<std::size_t>(p.n_states());
    if (options.initial_values) {
        if (options.initial_values->size() != n) throw ValidationError("initial value table size mismatch");
        result.table.values = *options.initial_values;
    } else {
        result.table.values = default_initial_values(p, options.op, options.accepting_value);
    }
    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) result.table.values[static_cast<std::size_t>(sq)] = options.accepting_value;
    }

    std::vector<char> solved(n, 0);  // accepting or completed in an earlier level
    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) solved[static_cast<std::size_t>(sq)] = 1;
    }

    std::vector<std::vector<int>> level_states(d.levels.size());
    std::vector<int> dropped_states;
    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) continue;
        int level = d.level_of_mode(p.mode_of(sq));
        if (level < 0) {
            dropped_states.push_back(sq);
        } else {
            level_states[static_cast<std::size_t>(level)].push_back(sq);
        }
    }

    auto solve_block = [&](const std::vector<int>& states) {
        SolveOptions block = options;
        block.restrict_states = states;
        block.initial_values = result.table.values;
        block.extra_pinned.clear();
        for (int sq = 0; sq < p.n_states(); ++sq) {
            if (solved[static_cast<std::size_t>(sq)] && !p.is_accepting(sq)) {
                block.extra_pinned.emplace_back(sq, result.table.values[static_cast<std::size_t>(sq)]);
            }
        }
        ValueTable t = value_iteration(p, block);
        result.table.values = t.values;
        result.table.backup_count += t.backup_count;
        result.table.sweeps += t.sweeps;
        result.table.residual = std::max(result.table.residual, t.residual);
        result.backups_per_level.push_back(t.backup_count);
        result.sweeps_per_level.push_back(t.sweeps);
        if (!t.converged) {
            throw SolverError("TVI level did not converge within the sweep cap; residual " +
                              std::to_string(t.residual));
        }
        for (int sq : states) solved[static_cast<std::size_t>(sq)] = 1;
    };

    for (const auto& states : level_states) {
        if (states.empty()) {
            result.backups_per_level.push_back(0);
            result.sweeps_per_level.push_back(0);
            continue;
        }
        solve_block(states);
    }
    if (!dropped_states.empty()) {
        solve_block(dropped_states);
        result.solved_dropped_modes = true;
    }
    result.table.converged = true;
    return result;
}

namespace {

SoftPolicy make_policy(const ProductMdp& p, const std::vector<double>& values,
                       const SolveOptions& options, bool greedy) {
    SoftPolicy policy;
    const std::size_t n = static_cast<std::size_t>(p.n_states());
    policy.dist.resize(n);
    policy.q_values.resize(n);
    for (int sq = 0; sq < p.n_states(); ++sq) {
        auto& dist = policy.dist[static_cast<std::size_t>(sq)];
        auto& qv = policy.q_values[static_cast<std::size_t>(sq)];
        dist.assign(static_cast<std::size_t>(p.n_actions()), 0.0);
        qv.assign(static_cast<std::size_t>(p.n_actions()), 0.0);
        double normalizer = greedy ? 0.0 : softmax_backup(p, values, sq, options.reward_scale);
        int best_action = -1;
        double best_q = 0;
        for (int a = 0; a < p.n_actions(); ++a) {
            if (!p.action_available(sq, a)) continue;
            double q = action_value(p, values, sq, a, options.reward_scale);
            qv[static_cast<std::size_t>(a)] = q;
            if (greedy) {
                if (best_action < 0 || q > best_q) {
                    best_action = a;
                    best_q = q;
                }
            } else {
                dist[static_cast<std::size_t>(a)] = std::exp((q - normalizer) / p.tau());
            }
        }
        if (greedy && best_action >= 0) dist[static_cast<std::size_t>(best_action)] = 1.0;
    }
    return policy;
}

}  // namespace

SoftPolicy extract_policy(const ProductMdp& p, const std::vector<double>& values,
                          const SolveOptions& options) {
    return make_policy(p, values, options, false);
}

SoftPolicy extract_greedy_policy(const ProductMdp& p, const std::vector<double>& values,
                                 const SolveOptions& options) {
    return make_policy(p, values, options, true);
}

}  // namespace topoplan
