#pragma once

#include <optional>
#include <vector>

#include "topoplan/decomposition.hpp"
#include "topoplan/product.hpp"

namespace topoplan {

enum class BackupOperator { softmax, hardmax_max, hardmax_min };

struct SolveOptions {
    BackupOperator op = BackupOperator::softmax;
    double epsilon = 1e-3;
    long long max_sweeps = 100000;
    // Reward amplification applied uniformly before solving. Zero switches to
    // the boundary-value convention where only `accepting_value` carries the
    // task signal.
    double reward_scale = 1.0;
    // Value pinned at accepting states: 0 for the reward-accumulation
    // convention, alpha for the absorbing-boundary convention.
    double accepting_value = 0.0;
    // Solve only these states (default: every non-pinned state).
    std::optional<std::vector<int>> restrict_states;
    // Additional (state, value) pins, e.g. previously solved levels.
    std::vector<std::pair<int, double>> extra_pinned;
    // Default initialization: the per-state entropy idle value
    // tau ln|A(s)| / (1 - gamma) for the softmax operator (the closed-form
    // value of a state that never progresses), 0 for hardmax. Starting at the
    // idle value removes the uniform entropy transient that otherwise
    // dominates every sweep count.
    std::optional<std::vector<double>> initial_values;
};

// The default initialization described above.
std::vector<double> default_initial_values(const ProductMdp& p, BackupOperator op,
                                           double accepting_value);

struct ValueTable {
    std::vector<double> values;
    long long backup_count = 0;
    long long sweeps = 0;
    double residual = 0.0;
    bool converged = false;
};

// tau log sum_a exp((scale*R + gamma E[V]) / tau), max-shifted so finite
// inputs never overflow.
double softmax_backup(const ProductMdp& p, const std::vector<double>& values, int sq,
                      double reward_scale = 1.0);

// opt_a [scale*R + gamma E[V]]; ties break to the lowest action index.
double hardmax_backup(const ProductMdp& p, const std::vector<double>& values, int sq,
                      bool minimize = false, double reward_scale = 1.0);

double apply_backup(const ProductMdp& p, const std::vector<double>& values, int sq,
                    BackupOperator op, double reward_scale = 1.0);

// One Jacobi sweep of the operator over all states (no in-place update); used
// by property checks for contraction/monotonicity and fixed-point residuals.
std::vector<double> apply_backup_sweep(const ProductMdp& p, const std::vector<double>& values,
                                       BackupOperator op, double reward_scale = 1.0);

// Gauss-Seidel value iteration: in-place sweeps in ascending state order until
// the max per-sweep change drops below epsilon. Pinned states (accepting +
// extra) are never backed up.
ValueTable value_iteration(const ProductMdp& p, const SolveOptions& options);

struct TviResult {
    ValueTable table;
    std::vector<long long> backups_per_level;
    std::vector<long long> sweeps_per_level;
    bool solved_dropped_modes = false;
};

// Topological value iteration: solves level sets in backup order with all
// previously solved and accepting values pinned. States of dropped modes form
// a closed zero-reward subsystem and are solved in a final stage.
TviResult topological_value_iteration(const ProductMdp& p, const Decomposition& d,
                                      const SolveOptions& options);

struct SoftPolicy {
    std::vector<std::vector<double>> dist;      // per state, per action; empty row = unavailable
    std::vector<std::vector<double>> q_values;  // same shape
};

// pi(a|s) = exp((Q(s,a) - B V(s)) / tau) with B the softmax backup of V, so
// the distribution normalizes even for non-fixed-point V.
SoftPolicy extract_policy(const ProductMdp& p, const std::vector<double>& values,
                          const SolveOptions& options);

// Deterministic argmax policy (point-mass rows).
SoftPolicy extract_greedy_policy(const ProductMdp& p, const std::vector<double>& values,
                                 const SolveOptions& options);

}  // namespace topoplan
