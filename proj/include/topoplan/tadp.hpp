#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topoplan/decomposition.hpp"
#include "topoplan/kernels.hpp"
#include "topoplan/rollout.hpp"
#include "topoplan/simulator.hpp"

namespace topoplan {

struct TadpConfig {
    double gamma = 0.9;
    double tau = 2.0;
    double epsilon = 1e-3;   // value-change tolerance for inner convergence
    double alpha = 60.0;     // boundary-value amplification
    double b = 1.5;          // penalty growth coefficient
    double eta = 0.1;        // initial learning rate
    double nu0 = 2.0;        // initial penalty weight
    double nu_max = 100.0;   // penalty ceiling; unchecked growth makes the
                             // kernel-coupled surface too stiff to descend
    double lambda0 = 0.0;    // initial multiplier
    int n_trajectories = 30;
    int max_traj_len = 3;
    double sigma = 1.0;
    int center_interval = 1;
    std::uint64_t seed = 1;

    // Solver knobs beyond the core hyperparameters above. Each level runs
    // learning outers (constant step size, fixed epoch budget, multiplier
    // updates in between) until the sampled residual is feasible, then one
    // annealed polish pass that certifies value stability.
    int eta_warmup = 0;              // polish epochs at full eta before decay
    double eta_decay = 0.96;         // per-epoch decay during the polish pass
    double eta_outer_decay = 0.85;   // learning step-size factor per outer iteration
    double grad_clip = 25.0;         // gradient 2-norm ceiling (0 disables)
    double theta_bound = 1e6;        // divergence guard on |theta|_inf
    int model_samples = 256;         // simulator draws per (state, action)
    // Learning stops when max |g| over the constraint states drops below
    // tol * alpha: at the ADP optimum the approximation rides the Bellman
    // surface, so the two-sided gap measures both feasibility and how far the
    // upper bound still is from being minimized.
    double feasibility_tol = 2e-3;
    int inner_epoch_cap = 100;       // learning epochs per outer iteration
    int outer_iteration_cap = 50;
    int polish_epoch_cap = 300;      // budget of the final annealed pass
    int level_epoch_cap = 2000;      // total epochs a level may consume
    int stable_epochs = 50;          // consecutive sub-epsilon epochs to certify stability
    double theta_init = 0.0;
    bool reward_substitution = false;  // propagate boundary values through rewards instead
    std::vector<int> trace_states;     // product states to trace (empty = automatic)
};

struct LagrangianState {
    double lambda = 0.0;
    double nu = 2.0;
    double b = 1.5;
    double eta = 0.1;
    double alpha = 60.0;
    int inner_iter = 0;
    int outer_iter = 0;
};

// B(x) = max(x, 0)
double penalty(double x);

// lambda += nu * E[B(g)], then nu *= b; one outer step.
void update_multipliers(LagrangianState& ls, double residual_expectation);

// Per-mode linear value approximation plus constants for modes whose values
// are fixed (accepting: 1, non-coaccessible: 0; both stored unscaled and
// alpha-scaled on read).
struct ValueApprox {
    const KernelBasis* basis = nullptr;
    double alpha = 1.0;
    std::vector<std::optional<double>> pinned;  // per mode
    std::vector<std::vector<double>> theta;     // per mode; empty while untrained

    double value(int mdp_state, int mode) const;
};

// Everything the ADP operations of one level need: the structural view, the
// sampled dynamics, the basis, which modes are decision variables, and the
// constraint states. Transition matrices are never touched.
class AdpLevelContext {
public:
    AdpLevelContext(const ProductStructure& structure, const EmpiricalModel& model,
                    const KernelBasis& basis, ValueApprox& approx, std::vector<int> trainable_modes,
                    std::vector<int> constraint_states, bool reward_substitution = false);

    const ProductStructure& structure() const { return *structure_; }
    const std::vector<int>& trainable_modes() const { return trainable_modes_; }
    const std::vector<int>& constraint_states() const { return constraint_states_; }
    ValueApprox& approx() { return *approx_; }
    const ValueApprox& approx() const { return *approx_; }
    int theta_dim() const { return theta_dim_; }
    int theta_offset(int mode) const { return theta_offset_[static_cast<std::size_t>(mode)]; }

    // Boundary states terminate trajectories and hold fixed values: pinned or
    // earlier-level modes, absorbing states, non-traversable cells.
    bool is_boundary(int sq) const;
    double state_value(int sq) const;

    // Softmax backup of the approximation through the empirical model.
    double backup(int sq) const;
    // pi(a | sq) from the approximation; zero entries for unavailable actions.
    std::vector<double> policy(int sq) const;

    // Flat theta view over the trainable modes.
    std::vector<double> gather_theta() const;
    void scatter_theta(std::span<const double> flat);

    // d(backup)/d(theta) accumulated as grad += weight * grad_backup(sq).
    void accumulate_backup_gradient(int sq, double weight, std::vector<double>& grad) const;
    // d(V(sq))/d(theta) accumulated the same way.
    void accumulate_value_gradient(int sq, double weight, std::vector<double>& grad) const;
    // d(log pi(a|sq))/d(theta).
    void accumulate_log_policy_gradient(int sq, int action, double weight,
                                        std::vector<double>& grad) const;

private:
    struct ActionView {
        int action;
        double logit;
    };
    std::vector<ActionView> action_logits(int sq) const;

    const ProductStructure* structure_;
    const EmpiricalModel* model_;
    const KernelBasis* basis_;
    ValueApprox* approx_;
    std::vector<int> trainable_modes_;
    std::vector<int> constraint_states_;
    std::vector<int> theta_offset_;  // per mode, -1 when not trainable
    int theta_dim_ = 0;
    std::vector<char> trainable_flag_;  // per mode
    bool reward_substitution_ = false;
};

// g = B V - V at a product state; 0 by convention on boundary states.
double constraint_residual(const AdpLevelContext& ctx, int sq);

// Sum over the trajectory's step states of
// f(s) = V(s) + lambda B(g(s)) + (nu/2) B(g(s))^2.
double path_objective(const AdpLevelContext& ctx, const LagrangianState& ls, const Trajectory& h);

// Monte-Carlo gradient of the sampled augmented-Lagrangian objective:
// score-function term plus pathwise term, with dB/dg = 1{g > 0}. The optional
// baseline is subtracted from f(h) inside the score-function term only; the
// correction has zero expectation, so the default 0 is the plain estimator
// and any other value is a variance-reduced one.
std::vector<double> mc_gradient(const AdpLevelContext& ctx, const LagrangianState& ls,
                                std::span<const Trajectory> batch, double baseline = 0.0);

struct InnerResult {
    int epochs = 0;
    bool converged = false;
    double last_delta = 0.0;
    double grad_norm_ema = 0.0;
};

// One inner optimization run: repeatedly samples a trajectory batch from the
// current policy and descends the sampled objective until the values on the
// constraint states stay within epsilon for `stable_epochs` consecutive
// epochs, or the budget runs out. Throws SolverError on divergence.
InnerResult inner_optimize(AdpLevelContext& ctx, LagrangianState& ls, const ProductSimulator& sim,
                           const TadpConfig& config, int epoch_budget, long long& batch_counter,
                           const std::function<void()>& on_epoch = {});

struct TadpLevelReport {
    int level = -1;
    std::vector<int> modes;
    long long epochs = 0;
    int outer_iterations = 0;
    double max_residual = 0.0;   // max B(g) over constraint states at exit
    double max_gap = 0.0;        // max |g| over constraint states at exit
    double mean_residual = 0.0;  // E[B(g)] over the last sampled batch
    double lambda = 0.0;
    double nu = 0.0;
    bool feasible = false;
};

struct TraceLog {
    std::vector<int> states;                       // product states
    std::vector<std::vector<double>> values;       // per epoch, per traced state
};

struct TadpResult {
    ValueApprox approx;
    SoftPolicy policy;
    TraceLog trace;
    std::vector<TadpLevelReport> levels;
    long long total_epochs = 0;
    long long simulator_steps = 0;
};

// Model-free level-ordered solve: accepting modes are fixed at value 1
// (alpha-scaled), then each level set's ADP program is solved by the
// augmented-Lagrangian outer loop with sampled gradients, substituting
// earlier-level values as absorbing boundaries.
TadpResult tadp_solve(const ProductStructure& structure, const ProductSimulator& sim,
                      const Decomposition& d, const KernelBasis& basis, const TadpConfig& config);

// Convenience overload: extracts the structure and snapshots the dynamics.
TadpResult tadp_solve(const ProductMdp& p, const Decomposition& d, const KernelBasis& basis,
                      const TadpConfig& config);

}  // namespace topoplan
