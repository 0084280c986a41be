#include "topoplan/tadp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "topoplan/errors.hpp"

namespace topoplan {

double penalty(double x) { return x > 0 ? x : 0.0; }

void update_multipliers(LagrangianState& ls, double residual_expectation) {
    if (residual_expectation < 0) throw ValidationError("residual expectation must be non-negative");
    ls.lambda += ls.nu * residual_expectation;
    ls.nu *= ls.b;
    ++ls.outer_iter;
}

double ValueApprox::value(int mdp_state, int mode) const {
    const auto& pin = pinned[static_cast<std::size_t>(mode)];
    if (pin.has_value()) return alpha * *pin;
    const auto& th = theta[static_cast<std::size_t>(mode)];
    if (th.empty()) return 0.0;
    return basis->dot(mdp_state, th);
}

AdpLevelContext::AdpLevelContext(const ProductStructure& structure, const EmpiricalModel& model,
                                 const KernelBasis& basis, ValueApprox& approx,
                                 std::vector<int> trainable_modes, std::vector<int> constraint_states,
                                 bool reward_substitution)
    : structure_(&structure),
      model_(&model),
      basis_(&basis),
      approx_(&approx),
      trainable_modes_(std::move(trainable_modes)),
      constraint_states_(std::move(constraint_states)),
      reward_substitution_(reward_substitution) {
    std::sort(trainable_modes_.begin(), trainable_modes_.end());
    std::sort(constraint_states_.begin(), constraint_states_.end());
    theta_offset_.assign(static_cast<std::size_t>(structure.n_modes), -1);
    trainable_flag_.assign(static_cast<std::size_t>(structure.n_modes), 0);
    for (int q : trainable_modes_) {
        theta_offset_[static_cast<std::size_t>(q)] = theta_dim_;
        trainable_flag_[static_cast<std::size_t>(q)] = 1;
        theta_dim_ += basis.size();
        auto& th = approx_->theta[static_cast<std::size_t>(q)];
        if (th.empty()) th.assign(static_cast<std::size_t>(basis.size()), 0.0);
    }
}

bool AdpLevelContext::is_boundary(int sq) const {
    if (structure_->is_absorbing(sq)) return true;
    int mode = structure_->mode_of[static_cast<std::size_t>(sq)];
    if (!trainable_flag_[static_cast<std::size_t>(mode)]) return true;
    return !basis_->traversable(structure_->mdp_state_of[static_cast<std::size_t>(sq)]);
}

double AdpLevelContext::state_value(int sq) const {
    return approx_->value(structure_->mdp_state_of[static_cast<std::size_t>(sq)],
                          structure_->mode_of[static_cast<std::size_t>(sq)]);
}

std::vector<AdpLevelContext::ActionView> AdpLevelContext::action_logits(int sq) const {
    std::vector<ActionView> out;
    for (int a = 0; a < structure_->n_actions; ++a) {
        if (!model_->action_available(sq, a)) continue;
        const std::vector<Outcome>& row = model_->row(sq, a);
        double immediate = 0.0;
        double future = 0.0;
        for (const Outcome& o : row) {
            double v = approx_->value(structure_->mdp_state_of[static_cast<std::size_t>(o.state)],
                                      structure_->mode_of[static_cast<std::size_t>(o.state)]);
            if (reward_substitution_ && is_boundary(o.state)) {
                immediate += o.prob * v;
            } else {
                future += o.prob * v;
            }
        }
        out.push_back({a, immediate + structure_->gamma * future});
    }
    if (out.empty()) throw ValidationError("no available action at product state " + std::to_string(sq));
    return out;
}

double AdpLevelContext::backup(int sq) const {
    auto logits = action_logits(sq);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& av : logits) best = std::max(best, av.logit);
    double sum = 0;
    for (const auto& av : logits) sum += std::exp((av.logit - best) / structure_->tau);
    return best + structure_->tau * std::log(sum);
}

std::vector<double> AdpLevelContext::policy(int sq) const {
    auto logits = action_logits(sq);
    double normalizer = backup(sq);
    std::vector<double> dist(static_cast<std::size_t>(structure_->n_actions), 0.0);
    for (const auto& av : logits) {
        dist[static_cast<std::size_t>(av.action)] = std::exp((av.logit - normalizer) / structure_->tau);
    }
    return dist;
}

std::vector<double> AdpLevelContext::gather_theta() const {
    std::vector<double> flat(static_cast<std::size_t>(theta_dim_), 0.0);
    for (int q : trainable_modes_) {
        const auto& th = approx_->theta[static_cast<std::size_t>(q)];
        std::copy(th.begin(), th.end(),
                  flat.begin() + theta_offset_[static_cast<std::size_t>(q)]);
    }
    return flat;
}

void AdpLevelContext::scatter_theta(std::span<const double> flat) {
    for (int q : trainable_modes_) {
        auto& th = approx_->theta[static_cast<std::size_t>(q)];
        int off = theta_offset_[static_cast<std::size_t>(q)];
        std::copy(flat.begin() + off, flat.begin() + off + basis_->size(), th.begin());
    }
}

void AdpLevelContext::accumulate_value_gradient(int sq, double weight, std::vector<double>& grad) const {
    if (is_boundary(sq)) return;
    int mode = structure_->mode_of[static_cast<std::size_t>(sq)];
    int off = theta_offset_[static_cast<std::size_t>(mode)];
    auto phi = basis_->features(structure_->mdp_state_of[static_cast<std::size_t>(sq)]);
    for (std::size_t j = 0; j < phi.size(); ++j) {
        grad[static_cast<std::size_t>(off) + j] += weight * phi[j];
    }
}

void AdpLevelContext::accumulate_backup_gradient(int sq, double weight, std::vector<double>& grad) const {
    auto logits = action_logits(sq);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& av : logits) best = std::max(best, av.logit);
    double sum = 0;
    for (const auto& av : logits) sum += std::exp((av.logit - best) / structure_->tau);

    for (const auto& av : logits) {
        double w = std::exp((av.logit - best) / structure_->tau) / sum;
        const auto& row = model_->row(sq, av.action);
        for (const Outcome& o : row) {
            int mode = structure_->mode_of[static_cast<std::size_t>(o.state)];
            if (!trainable_flag_[static_cast<std::size_t>(mode)]) continue;
            int cell = structure_->mdp_state_of[static_cast<std::size_t>(o.state)];
            if (!basis_->traversable(cell)) continue;
            int off = theta_offset_[static_cast<std::size_t>(mode)];
            auto phi = basis_->features(cell);
            double coef = weight * w * structure_->gamma * o.prob;
            for (std::size_t j = 0; j < phi.size(); ++j) {
                grad[static_cast<std::size_t>(off) + j] += coef * phi[j];
            }
        }
    }
}

void AdpLevelContext::accumulate_log_policy_gradient(int sq, int action, double weight,
                                                     std::vector<double>& grad) const {
    auto logits = action_logits(sq);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& av : logits) best = std::max(best, av.logit);
    double sum = 0;
    for (const auto& av : logits) sum += std::exp((av.logit - best) / structure_->tau);

    const double tau = structure_->tau;
    for (const auto& av : logits) {
        double w = std::exp((av.logit - best) / tau) / sum;
        // d log pi(action)/d theta = (dz_action - sum_b pi_b dz_b) / tau
        double coef_action = (av.action == action ? 1.0 : 0.0) - w;
        if (coef_action == 0.0) continue;
        const auto& row = model_->row(sq, av.action);
        for (const Outcome& o : row) {
            int mode = structure_->mode_of[static_cast<std::size_t>(o.state)];
            if (!trainable_flag_[static_cast<std::size_t>(mode)]) continue;
            int cell = structure_->mdp_state_of[static_cast<std::size_t>(o.state)];
            if (!basis_->traversable(cell)) continue;
            int off = theta_offset_[static_cast<std::size_t>(mode)];
            auto phi = basis_->features(cell);
            double coef = weight * coef_action * structure_->gamma * o.prob / tau;
            for (std::size_t j = 0; j < phi.size(); ++j) {
                grad[static_cast<std::size_t>(off) + j] += coef * phi[j];
            }
        }
    }
}

double constraint_residual(const AdpLevelContext& ctx, int sq) {
    if (ctx.is_boundary(sq)) return 0.0;
    return ctx.backup(sq) - ctx.state_value(sq);
}

double path_objective(const AdpLevelContext& ctx, const LagrangianState& ls, const Trajectory& h) {
    double total = 0;
    for (const TrajectoryStep& step : h.steps) {
        double v = ctx.state_value(step.state);
        double bg = penalty(constraint_residual(ctx, step.state));
        total += v + ls.lambda * bg + 0.5 * ls.nu * bg * bg;
    }
    return total;
}

std::vector<double> mc_gradient(const AdpLevelContext& ctx, const LagrangianState& ls,
                                std::span<const Trajectory> batch, double baseline) {
    if (batch.empty()) throw ValidationError("mc_gradient needs at least one trajectory");
    std::vector<double> grad(static_cast<std::size_t>(ctx.theta_dim()), 0.0);
    std::vector<double> score(grad.size());
    for (const Trajectory& h : batch) {
        if (h.steps.empty()) continue;
        // score-function term: (sum_t d log pi) * f(h)
        double f_h = path_objective(ctx, ls, h) - baseline;
        std::fill(score.begin(), score.end(), 0.0);
        for (const TrajectoryStep& step : h.steps) {
            ctx.accumulate_log_policy_gradient(step.state, step.action, 1.0, score);
        }
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += score[j] * f_h;
        // pathwise term: sum_t d f(s_t)
        for (const TrajectoryStep& step : h.steps) {
            if (ctx.is_boundary(step.state)) continue;
            double g = constraint_residual(ctx, step.state);
            double bg = penalty(g);
            double w = ls.lambda * (g > 0 ? 1.0 : 0.0) + ls.nu * bg;
            ctx.accumulate_value_gradient(step.state, 1.0 - w, grad);
            if (w != 0.0) ctx.accumulate_backup_gradient(step.state, w, grad);
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return grad;
}

namespace {

Trajectory sample_adp_trajectory(const AdpLevelContext& ctx, const ProductSimulator& sim, int start,
                                 int max_len, Rng& rng) {
    Trajectory t;
    t.start = start;
    t.final_state = start;
    int state = start;
    for (int i = 0; i < max_len; ++i) {
        if (ctx.is_boundary(state)) break;
        std::vector<double> dist = ctx.policy(state);
        double u = rng.uniform01();
        double cum = 0;
        int action = -1;
        for (std::size_t a = 0; a < dist.size(); ++a) {
            if (dist[a] <= 0) continue;
            action = static_cast<int>(a);
            cum += dist[a];
            if (u < cum) break;
        }
        auto step = sim.sample_step(state, action, rng);
        t.steps.push_back({state, action, step.reward});
        state = step.next_state;
        t.final_state = state;
    }
    const auto& st = ctx.structure();
    if (st.is_accepting(t.final_state)) {
        t.terminated = Termination::accepting;
    } else if (st.is_absorbing(t.final_state)) {
        t.terminated = Termination::sink;
    } else {
        t.terminated = Termination::length_cap;
    }
    return t;
}

std::vector<Trajectory> sample_batch(const AdpLevelContext& ctx, const ProductSimulator& sim,
                                     const TadpConfig& config, long long batch_index) {
    Rng rng(derive_seed(config.seed, kStreamTrajectory, static_cast<std::uint64_t>(batch_index)));
    const auto& starts = ctx.constraint_states();
    std::vector<Trajectory> batch;
    batch.reserve(static_cast<std::size_t>(config.n_trajectories));
    for (int i = 0; i < config.n_trajectories; ++i) {
        int start = starts[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(starts.size())))];
        batch.push_back(sample_adp_trajectory(ctx, sim, start, config.max_traj_len, rng));
    }
    return batch;
}

double mean_batch_residual(const AdpLevelContext& ctx, std::span<const Trajectory> batch) {
    double sum = 0;
    long long count = 0;
    for (const Trajectory& h : batch) {
        for (const TrajectoryStep& step : h.steps) {
            sum += penalty(constraint_residual(ctx, step.state));
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

double max_constraint_residual(const AdpLevelContext& ctx) {
    double worst = 0;
    for (int sq : ctx.constraint_states()) {
        worst = std::max(worst, penalty(constraint_residual(ctx, sq)));
    }
    return worst;
}

double max_constraint_gap(const AdpLevelContext& ctx) {
    double worst = 0;
    for (int sq : ctx.constraint_states()) {
        worst = std::max(worst, std::abs(constraint_residual(ctx, sq)));
    }
    return worst;
}

std::vector<double> eval_values(const AdpLevelContext& ctx) {
    std::vector<double> v;
    v.reserve(ctx.constraint_states().size());
    for (int sq : ctx.constraint_states()) v.push_back(ctx.state_value(sq));
    return v;
}

struct InnerLoopEnv {
    const ProductSimulator* sim;
    const TadpConfig* config;
    long long* batch_counter;
    std::function<void()> on_epoch;
};

InnerResult run_inner(AdpLevelContext& ctx, LagrangianState& ls, const InnerLoopEnv& env,
                      int epoch_budget) {
    const TadpConfig& config = *env.config;
    InnerResult result;
    std::vector<double> previous = eval_values(ctx);
    std::vector<double> theta = ctx.gather_theta();
    int stable = 0;

    for (int epoch = 0; epoch < epoch_budget; ++epoch) {
        auto batch = sample_batch(ctx, *env.sim, config, (*env.batch_counter)++);
        // mean path objective as the score-function baseline
        double baseline = 0;
        for (const Trajectory& h : batch) baseline += path_objective(ctx, ls, h);
        baseline /= static_cast<double>(batch.size());
        std::vector<double> grad = mc_gradient(ctx, ls, batch, baseline);

        double norm = 0;
        for (double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        if (config.grad_clip > 0 && norm > config.grad_clip) {
            double scale = config.grad_clip / norm;
            for (double& g : grad) g *= scale;
        }
        result.grad_norm_ema = result.grad_norm_ema == 0.0
                                   ? norm
                                   : 0.9 * result.grad_norm_ema + 0.1 * norm;

        double eta = ls.eta;
        if (epoch >= config.eta_warmup) {
            eta *= std::pow(config.eta_decay, static_cast<double>(epoch - config.eta_warmup));
        }
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= eta * grad[j];
        ctx.scatter_theta(theta);
        ++ls.inner_iter;
        ++result.epochs;

        for (double t : theta) {
            if (!std::isfinite(t) || std::abs(t) > config.theta_bound) {
                throw SolverError("ADP inner loop diverged: |theta| exceeded bound at epoch " +
                                  std::to_string(ls.inner_iter));
            }
        }

        std::vector<double> current = eval_values(ctx);
        double delta = 0;
        for (std::size_t i = 0; i < current.size(); ++i) {
            delta = std::max(delta, std::abs(current[i] - previous[i]));
        }
        previous = std::move(current);
        result.last_delta = delta;
        if (env.on_epoch) env.on_epoch();

        stable = delta <= config.epsilon ? stable + 1 : 0;
        if (stable >= config.stable_epochs) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace

InnerResult inner_optimize(AdpLevelContext& ctx, LagrangianState& ls, const ProductSimulator& sim,
                           const TadpConfig& config, int epoch_budget, long long& batch_counter,
                           const std::function<void()>& on_epoch) {
    InnerLoopEnv env{&sim, &config, &batch_counter, on_epoch};
    return run_inner(ctx, ls, env, epoch_budget);
}

TadpResult tadp_solve(const ProductStructure& structure, const ProductSimulator& sim,
                      const Decomposition& d, const KernelBasis& basis, const TadpConfig& config) {
    if (d.dfa.mode_count() != structure.n_modes) {
        throw ValidationError("decomposition does not match the product's automaton");
    }

    TadpResult result;
    result.approx.basis = &basis;
    result.approx.alpha = config.alpha;
    result.approx.pinned.assign(static_cast<std::size_t>(structure.n_modes), std::nullopt);
    result.approx.theta.assign(static_cast<std::size_t>(structure.n_modes), {});
    for (int q = 0; q < structure.n_modes; ++q) {
        if (d.dfa.is_accepting(q)) {
            result.approx.pinned[static_cast<std::size_t>(q)] = 1.0;
        } else if (d.level_of_mode(q) < 0) {
            result.approx.pinned[static_cast<std::size_t>(q)] = 0.0;
        }
    }

    EmpiricalModel model(sim, structure.n_actions, config.seed, config.model_samples);

    // Trace bookkeeping: default to the middle cell of each trainable mode
    // plus the initial product state.
    std::vector<int> trace_states = config.trace_states;
    if (trace_states.empty()) {
        for (int q = 0; q < structure.n_modes; ++q) {
            if (d.dfa.is_accepting(q) || d.level_of_mode(q) < 0) continue;
            int sq = structure.index_of((structure.n_mdp_states - 1) / 2, q);
            if (sq >= 0) trace_states.push_back(sq);
        }
        trace_states.push_back(structure.initial);
        std::sort(trace_states.begin(), trace_states.end());
        trace_states.erase(std::unique(trace_states.begin(), trace_states.end()), trace_states.end());
    }
    result.trace.states = trace_states;

    auto log_epoch = [&]() {
        std::vector<double> row;
        row.reserve(trace_states.size());
        for (int sq : trace_states) {
            row.push_back(result.approx.value(structure.mdp_state_of[static_cast<std::size_t>(sq)],
                                              structure.mode_of[static_cast<std::size_t>(sq)]));
        }
        result.trace.values.push_back(std::move(row));
        ++result.total_epochs;
    };

    long long batch_counter = 0;

    for (std::size_t level = 0; level < d.levels.size(); ++level) {
        TadpLevelReport report;
        report.level = static_cast<int>(level);

        std::vector<int> trainable;
        std::vector<int> constraint_states;
        for (int meta : d.levels[level]) {
            // constraint pool of the meta-mode: Inv(X) plus every Guard(X, .)
            std::vector<char> pool(static_cast<std::size_t>(structure.n_mdp_states), 0);
            for (int q : d.meta_modes[static_cast<std::size_t>(meta)]) {
                for (int s : d.invariants[static_cast<std::size_t>(q)]) pool[static_cast<std::size_t>(s)] = 1;
                for (const auto& [key, states] : d.guards) {
                    if (key.first != q) continue;
                    for (int s : states) pool[static_cast<std::size_t>(s)] = 1;
                }
            }
            for (int q : d.meta_modes[static_cast<std::size_t>(meta)]) {
                if (d.dfa.is_accepting(q)) continue;
                trainable.push_back(q);
                report.modes.push_back(q);
                for (int s = 0; s < structure.n_mdp_states; ++s) {
                    if (!pool[static_cast<std::size_t>(s)]) continue;
                    if (!basis.traversable(s)) continue;
                    int sq = structure.index_of(s, q);
                    if (sq >= 0) constraint_states.push_back(sq);
                }
            }
        }
        if (trainable.empty() || constraint_states.empty()) {
            result.levels.push_back(std::move(report));
            continue;
        }

        for (int q : trainable) {
            result.approx.theta[static_cast<std::size_t>(q)].assign(
                static_cast<std::size_t>(basis.size()), config.theta_init);
        }

        AdpLevelContext ctx(structure, model, basis, result.approx, trainable, constraint_states,
                            config.reward_substitution);
        LagrangianState ls;
        ls.lambda = config.lambda0;
        ls.nu = config.nu0;
        ls.b = config.b;
        ls.eta = config.eta;
        ls.alpha = config.alpha;

        try {
            // learning outers: constant step size per pass, no early stability stop
            TadpConfig learn = config;
            learn.eta_decay = 1.0;
            learn.eta_warmup = 0;
            learn.stable_epochs = config.level_epoch_cap + 1;

            auto measure = [&]() {
                auto probe = sample_batch(ctx, sim, config, batch_counter++);
                report.mean_residual = mean_batch_residual(ctx, probe);
                report.max_residual = max_constraint_residual(ctx);
                report.max_gap = max_constraint_gap(ctx);
                report.lambda = ls.lambda;
                report.nu = ls.nu;
            };

            for (int outer = 0; outer < config.outer_iteration_cap; ++outer) {
                int budget = std::min(config.inner_epoch_cap,
                                      config.level_epoch_cap - config.polish_epoch_cap - ls.inner_iter);
                if (budget <= 0) break;
                ls.eta = config.eta * std::pow(config.eta_outer_decay, static_cast<double>(outer));
                InnerResult inner =
                    inner_optimize(ctx, ls, sim, learn, budget, batch_counter, log_epoch);
                report.outer_iterations = outer + 1;
                measure();
                if (report.max_gap <= config.feasibility_tol * config.alpha) {
                    report.feasible = true;
                    break;
                }
                if (inner.grad_norm_ema <= config.epsilon) break;
                update_multipliers(ls, report.mean_residual);
                ls.nu = std::min(ls.nu, config.nu_max);
            }

            // polish: annealed pass that certifies epsilon-stability of values
            int polish_budget = std::min(config.polish_epoch_cap, config.level_epoch_cap - ls.inner_iter);
            if (polish_budget > 0) {
                ls.eta = config.eta *
                         std::pow(config.eta_outer_decay, static_cast<double>(report.outer_iterations));
                inner_optimize(ctx, ls, sim, config, polish_budget, batch_counter, log_epoch);
                measure();
                report.feasible = report.max_gap <= config.feasibility_tol * config.alpha;
            }
        } catch (const SolverError& e) {
            throw SolverError("TADP level " + std::to_string(level) + " failed: " + e.what());
        }
        report.epochs = ls.inner_iter;
        result.levels.push_back(std::move(report));
    }

    // Final policy over every product state, from the converged approximation.
    AdpLevelContext final_ctx(structure, model, basis, result.approx, {}, {}, false);
    result.policy.dist.resize(static_cast<std::size_t>(structure.n_states));
    result.policy.q_values.resize(static_cast<std::size_t>(structure.n_states));
    for (int sq = 0; sq < structure.n_states; ++sq) {
        auto& dist = result.policy.dist[static_cast<std::size_t>(sq)];
        auto& qv = result.policy.q_values[static_cast<std::size_t>(sq)];
        dist.assign(static_cast<std::size_t>(structure.n_actions), 0.0);
        qv.assign(static_cast<std::size_t>(structure.n_actions), 0.0);
        if (structure.is_absorbing(sq)) {
            int available = 0;
            for (int a = 0; a < structure.n_actions; ++a) {
                if (sim.action_available(sq, a)) ++available;
            }
            for (int a = 0; a < structure.n_actions; ++a) {
                if (sim.action_available(sq, a)) dist[static_cast<std::size_t>(a)] = 1.0 / available;
            }
            continue;
        }
        dist = final_ctx.policy(sq);
        for (int a = 0; a < structure.n_actions; ++a) {
            if (!sim.action_available(sq, a)) continue;
            double q = 0;
            for (const Outcome& o : model.row(sq, a)) {
                q += o.prob * result.approx.value(structure.mdp_state_of[static_cast<std::size_t>(o.state)],
                                                  structure.mode_of[static_cast<std::size_t>(o.state)]);
            }
            qv[static_cast<std::size_t>(a)] = structure.gamma * q;
        }
    }

    result.simulator_steps = model.step_calls();
    return result;
}

TadpResult tadp_solve(const ProductMdp& p, const Decomposition& d, const KernelBasis& basis,
                      const TadpConfig& config) {
    ProductStructure structure = extract_structure(p);
    SnapshotSimulator sim(p);
    return tadp_solve(structure, sim, d, basis, config);
}

}  // namespace topoplan
