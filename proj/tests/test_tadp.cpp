#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "topoplan/errors.hpp"
#include "topoplan/io.hpp"
#include "topoplan/product.hpp"
#include "topoplan/rng.hpp"
#include "topoplan/solvers.hpp"
#include "topoplan/tadp.hpp"

using namespace topoplan;

namespace {

// Small fixture: a grid world with a goal region under the reach task.
struct ReachFixture {
    GridWorldSpec spec;
    LabeledMdp m;
    TaskDfa dfa;
    Decomposition d;
    ProductMdp p;
    ProductStructure structure;
    SnapshotSimulator sim;
    KernelBasis basis;

    ReachFixture(int width, int height, Cell goal, double gamma, double tau, double sigma = 1.0)
        : spec(make_spec(width, height, goal)),
          m(build_grid_world(spec)),
          dfa(load_reach_dfa()),
          d(decompose(m, dfa)),
          p(build_product(m, dfa, {.gamma = gamma, .tau = tau})),
          structure(extract_structure(p)),
          sim(p),
          basis(m, grid_centers(spec, 1), sigma) {}

    static GridWorldSpec make_spec(int width, int height, Cell goal) {
        GridWorldSpec s;
        s.width = width;
        s.height = height;
        s.noise = 0.03;
        s.regions["goal"] = {goal};
        return s;
    }

    ValueApprox fresh_approx(double alpha) const {
        ValueApprox va;
        va.basis = &basis;
        va.alpha = alpha;
        va.pinned.assign(static_cast<std::size_t>(structure.n_modes), std::nullopt);
        va.theta.assign(static_cast<std::size_t>(structure.n_modes), {});
        for (int q = 0; q < structure.n_modes; ++q) {
            if (dfa.is_accepting(q)) va.pinned[static_cast<std::size_t>(q)] = 1.0;
        }
        return va;
    }

    std::vector<int> q0_constraint_states() const {
        std::vector<int> out;
        int q0 = dfa.mode_index("q1");
        for (int s = 0; s < m.n_states; ++s) {
            int sq = structure.index_of(s, q0);
            if (sq >= 0 && basis.traversable(s)) out.push_back(sq);
        }
        return out;
    }
};

// Importance-weighted sampled objective whose exact gradient at the reference
// theta is what mc_gradient estimates: F(theta) = (1/N) sum_h w_h(theta) f(h; theta)
// with w_h the likelihood ratio of the frozen trajectories.
double surrogate_objective(AdpLevelContext& ctx, const LagrangianState& ls,
                           std::span<const Trajectory> batch,
                           const std::vector<std::vector<double>>& ref_action_probs,
                           const std::vector<double>& theta) {
    ctx.scatter_theta(theta);
    double total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Trajectory& h = batch[i];
        double weight = 1.0;
        for (std::size_t t = 0; t < h.steps.size(); ++t) {
            double prob = ctx.policy(h.steps[t].state)[static_cast<std::size_t>(h.steps[t].action)];
            weight *= prob / ref_action_probs[i][t];
        }
        total += weight * path_objective(ctx, ls, h);
    }
    return total / static_cast<double>(batch.size());
}

std::vector<Trajectory> frozen_batch(const AdpLevelContext& ctx, const ProductSimulator& sim, int count,
                                     int max_len, std::uint64_t seed) {
    Rng rng(seed);
    const auto& starts = ctx.constraint_states();
    std::vector<Trajectory> batch;
    for (int i = 0; i < count; ++i) {
        int state = starts[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(starts.size())))];
        Trajectory t;
        t.start = state;
        for (int step = 0; step < max_len; ++step) {
            if (ctx.is_boundary(state)) break;
            auto dist = ctx.policy(state);
            double u = rng.uniform01();
            double cum = 0;
            int action = 0;
            for (std::size_t a = 0; a < dist.size(); ++a) {
                if (dist[a] <= 0) continue;
                action = static_cast<int>(a);
                cum += dist[a];
                if (u < cum) break;
            }
            auto next = sim.sample_step(state, action, rng);
            t.steps.push_back({state, action, next.reward});
            state = next.next_state;
        }
        t.final_state = state;
        batch.push_back(std::move(t));
    }
    return batch;
}

double relative_gap(const std::vector<double>& got, const std::vector<double>& want) {
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        diff += (got[i] - want[i]) * (got[i] - want[i]);
        norm += want[i] * want[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-8);
}

}  // namespace

TEST_CASE("penalty is max(x, 0)") {
    CHECK(penalty(-3.0) == 0.0);
    CHECK(penalty(0.0) == 0.0);
    CHECK(penalty(2.5) == 2.5);
}

TEST_CASE("multiplier update follows the augmented-Lagrangian rule") {
    LagrangianState ls;
    ls.lambda = 0.0;
    ls.nu = 2.0;
    ls.b = 1.5;

    update_multipliers(ls, 0.0);
    CHECK(ls.lambda == 0.0);
    CHECK(ls.nu == doctest::Approx(3.0));
    CHECK(ls.outer_iter == 1);

    ls.nu = 2.0;
    update_multipliers(ls, 0.5);
    CHECK(ls.lambda == doctest::Approx(1.0));
    CHECK(ls.nu == doctest::Approx(3.0));

    CHECK_THROWS_AS(update_multipliers(ls, -0.1), ValidationError);
}

TEST_CASE("constraint residual: boundary convention and the all-zero case") {
    ReachFixture fx(4, 4, {3, 3}, 0.9, 2.0);
    ValueApprox va = fx.fresh_approx(60.0);
    EmpiricalModel model(fx.sim, fx.structure.n_actions, 21, 512);
    AdpLevelContext ctx(fx.structure, model, fx.basis, va, {fx.dfa.mode_index("q1")},
                        fx.q0_constraint_states());

    // accepting states are boundary: residual 0 by convention
    int accepting = fx.structure.index_of(0, fx.dfa.mode_index("q2"));
    REQUIRE(accepting >= 0);
    CHECK(constraint_residual(ctx, accepting) == 0.0);

    // with theta = 0 and all successors staying in the zero-valued mode,
    // g = tau ln|A| exactly
    int far_corner = fx.structure.index_of(fx.spec.cell_index({0, 0}), fx.dfa.mode_index("q1"));
    CHECK(constraint_residual(ctx, far_corner) == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("constraint residual matches an independent backup evaluation") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);
    ValueApprox va = fx.fresh_approx(60.0);
    EmpiricalModel model(fx.sim, fx.structure.n_actions, 33, 256);
    int q0 = fx.dfa.mode_index("q1");
    AdpLevelContext ctx(fx.structure, model, fx.basis, va, {q0}, fx.q0_constraint_states());

    Rng rng(4);
    auto& theta = va.theta[static_cast<std::size_t>(q0)];
    for (double& t : theta) t = -10 + 20 * rng.uniform01();

    for (int sq : ctx.constraint_states()) {
        // direct logsumexp over the same empirical rows
        double best = -1e300;
        std::vector<double> logits;
        for (int a = 0; a < fx.structure.n_actions; ++a) {
            double z = 0;
            for (const Outcome& o : model.row(sq, a)) {
                z += o.prob * va.value(fx.structure.mdp_state_of[static_cast<std::size_t>(o.state)],
                                       fx.structure.mode_of[static_cast<std::size_t>(o.state)]);
            }
            z *= fx.structure.gamma;
            logits.push_back(z);
            best = std::max(best, z);
        }
        double sum = 0;
        for (double z : logits) sum += std::exp((z - best) / fx.structure.tau);
        double backup = best + fx.structure.tau * std::log(sum);
        double expected = backup - ctx.state_value(sq);
        CHECK(constraint_residual(ctx, sq) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("path objective sums V, multiplier, and penalty terms") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);
    ValueApprox va = fx.fresh_approx(60.0);
    EmpiricalModel model(fx.sim, fx.structure.n_actions, 5, 256);
    int q0 = fx.dfa.mode_index("q1");
    AdpLevelContext ctx(fx.structure, model, fx.basis, va, {q0}, fx.q0_constraint_states());

    LagrangianState ls;
    ls.lambda = 1.0;
    ls.nu = 2.0;

    Trajectory empty;
    CHECK(path_objective(ctx, ls, empty) == 0.0);

    Rng rng(8);
    auto& theta = va.theta[static_cast<std::size_t>(q0)];
    for (double& t : theta) t = 5 + 10 * rng.uniform01();

    auto batch = frozen_batch(ctx, fx.sim, 4, 3, 77);
    for (const Trajectory& h : batch) {
        double by_hand = 0;
        for (const auto& step : h.steps) {
            double v = ctx.state_value(step.state);
            double g = constraint_residual(ctx, step.state);
            double bg = g > 0 ? g : 0.0;
            by_hand += v + ls.lambda * bg + 0.5 * ls.nu * bg * bg;
        }
        CHECK(path_objective(ctx, ls, h) == doctest::Approx(by_hand).epsilon(1e-12));
    }

    // a single state with inactive constraint contributes exactly V
    int corner = fx.structure.index_of(fx.spec.cell_index({0, 0}), q0);
    if (constraint_residual(ctx, corner) <= 0) {
        Trajectory single;
        single.steps.push_back({corner, 0, 0.0});
        CHECK(path_objective(ctx, ls, single) == doctest::Approx(ctx.state_value(corner)));
    }
}

TEST_CASE("monte-carlo gradient matches finite differences of the sampled objective") {
    // 2x2 world, 8 product states, 2 kernel centers: small enough for dense FD
    GridWorldSpec spec;
    spec.width = 2;
    spec.height = 2;
    spec.noise = 0.1;
    spec.regions["goal"] = {{1, 1}};
    LabeledMdp m = build_grid_world(spec);
    TaskDfa dfa = load_reach_dfa();
    Decomposition d = decompose(m, dfa);
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});
    ProductStructure structure = extract_structure(p);
    SnapshotSimulator sim(p);
    KernelBasis basis(m, {spec.cell_index({0, 0}), spec.cell_index({1, 1})}, 1.0);

    int q0 = dfa.mode_index("q1");
    std::vector<int> constraint_states;
    for (int s = 0; s < m.n_states; ++s) {
        int sq = structure.index_of(s, q0);
        if (sq >= 0) constraint_states.push_back(sq);
    }

    EmpiricalModel model(sim, structure.n_actions, 111, 64);
    Rng rng(2718);
    int checked = 0;
    for (int config = 0; config < 24; ++config) {
        ValueApprox va;
        va.basis = &basis;
        va.alpha = 60.0;
        va.pinned.assign(static_cast<std::size_t>(structure.n_modes), std::nullopt);
        va.theta.assign(static_cast<std::size_t>(structure.n_modes), {});
        va.pinned[static_cast<std::size_t>(dfa.mode_index("q2"))] = 1.0;
        AdpLevelContext ctx(structure, model, basis, va, {q0}, constraint_states);

        std::vector<double> theta0(static_cast<std::size_t>(ctx.theta_dim()));
        for (double& t : theta0) t = -20 + 40 * rng.uniform01();
        ctx.scatter_theta(theta0);

        LagrangianState ls;
        ls.lambda = config == 0 ? 0.0 : 2.0 * rng.uniform01();
        ls.nu = config == 0 ? 0.0 : 0.5 + 3.5 * rng.uniform01();

        auto batch = frozen_batch(ctx, sim, 6, 3, 1000 + static_cast<std::uint64_t>(config));
        bool any_steps = false;
        for (const auto& h : batch) any_steps = any_steps || !h.steps.empty();
        if (!any_steps) continue;

        // reference action probabilities at theta0 for the likelihood ratio
        std::vector<std::vector<double>> ref_probs;
        for (const auto& h : batch) {
            std::vector<double> probs;
            for (const auto& step : h.steps) {
                probs.push_back(ctx.policy(step.state)[static_cast<std::size_t>(step.action)]);
            }
            ref_probs.push_back(std::move(probs));
        }

        // skip configurations where a residual sits on the penalty kink
        bool near_kink = false;
        for (const auto& h : batch) {
            for (const auto& step : h.steps) {
                if (std::abs(constraint_residual(ctx, step.state)) < 1e-4) near_kink = true;
            }
        }
        if (near_kink) continue;

        std::vector<double> analytic = mc_gradient(ctx, ls, batch);

        std::vector<double> fd(theta0.size());
        for (std::size_t i = 0; i < theta0.size(); ++i) {
            double delta = 1e-5 * std::max(1.0, std::abs(theta0[i]));
            std::vector<double> plus = theta0, minus = theta0;
            plus[i] += delta;
            minus[i] -= delta;
            double f_plus = surrogate_objective(ctx, ls, batch, ref_probs, plus);
            double f_minus = surrogate_objective(ctx, ls, batch, ref_probs, minus);
            fd[i] = (f_plus - f_minus) / (2 * delta);
        }
        ctx.scatter_theta(theta0);

        CHECK(relative_gap(analytic, fd) < 1e-4);
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("gradient with inactive constraints reduces to the value terms") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);
    ValueApprox va = fx.fresh_approx(60.0);
    EmpiricalModel model(fx.sim, fx.structure.n_actions, 77, 128);
    int q0 = fx.dfa.mode_index("q1");
    AdpLevelContext ctx(fx.structure, model, fx.basis, va, {q0}, fx.q0_constraint_states());

    // fit V = 58 uniformly: above the largest possible backup
    // gamma * alpha + tau ln 4 = 56.8, so every g < 0
    {
        const int n = fx.basis.size();
        std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                           std::vector<double>(static_cast<std::size_t>(n + 1), 58.0));
        for (int i = 0; i < n; ++i) {
            auto phi = fx.basis.features(i);
            for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = phi[j];
        }
        va.theta[static_cast<std::size_t>(q0)] = solve_linear_system(std::move(a));
    }

    LagrangianState with_penalty;
    with_penalty.lambda = 3.0;
    with_penalty.nu = 5.0;
    LagrangianState without;
    without.lambda = 0.0;
    without.nu = 0.0;

    auto batch = frozen_batch(ctx, fx.sim, 5, 3, 4242);
    for (const auto& h : batch) {
        for (const auto& step : h.steps) REQUIRE(constraint_residual(ctx, step.state) < 0);
    }
    CHECK(mc_gradient(ctx, with_penalty, batch) == mc_gradient(ctx, without, batch));

    CHECK_THROWS_AS(mc_gradient(ctx, without, {}), ValidationError);
}

TEST_CASE("inner loop leaves an already-fitted approximation near its fixed point") {
    ReachFixture fx(3, 1, {2, 0}, 0.9, 2.0);

    // exact values in the absorbing-boundary convention
    SolveOptions exact;
    exact.epsilon = 1e-10;
    exact.reward_scale = 0.0;
    exact.accepting_value = 60.0;
    ValueTable truth = value_iteration(fx.p, exact);

    // fit theta to the exact values (3 cells, 3 centers: solvable exactly)
    ValueApprox va = fx.fresh_approx(60.0);
    int q0 = fx.dfa.mode_index("q1");
    EmpiricalModel model(fx.sim, fx.structure.n_actions, 555, 4096);
    AdpLevelContext ctx(fx.structure, model, fx.basis, va, {q0}, fx.q0_constraint_states());

    // fit theta exactly to the truth (3 cells, 3 centers)
    const int n = fx.basis.size();
    std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
    for (int i = 0; i < n; ++i) {
        auto phi = fx.basis.features(i);
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = phi[j];
        int sq = fx.structure.index_of(i, q0);
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] =
            truth.values[static_cast<std::size_t>(sq)];
    }
    va.theta[static_cast<std::size_t>(q0)] = solve_linear_system(std::move(a));

    std::vector<double> before;
    for (int sq : ctx.constraint_states()) before.push_back(ctx.state_value(sq));

    TadpConfig config;
    config.seed = 31;
    config.eta = 0.002;
    config.stable_epochs = 5;
    config.n_trajectories = 30;
    LagrangianState ls;
    ls.eta = config.eta;
    long long counter = 0;
    inner_optimize(ctx, ls, fx.sim, config, 60, counter);

    for (std::size_t i = 0; i < before.size(); ++i) {
        double after = ctx.state_value(ctx.constraint_states()[i]);
        CHECK(std::abs(after - before[i]) < 3.0);  // sampling-noise bound, values are O(60)
    }
}

TEST_CASE("tadp_solve on a trivial already-accepting task does no optimization") {
    GridWorldSpec spec;
    spec.width = spec.height = 1;
    spec.noise = 0.0;
    spec.regions["goal"] = {{0, 0}};
    LabeledMdp m = build_grid_world(spec);
    TaskDfa dfa = load_reach_dfa();
    Decomposition d = decompose(m, dfa);
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});
    KernelBasis basis(m, {0}, 1.0);

    TadpConfig config;
    config.alpha = 60.0;
    TadpResult result = tadp_solve(p, d, basis, config);
    CHECK(result.total_epochs == 0);
    CHECK(result.approx.value(0, dfa.mode_index("q2")) == doctest::Approx(60.0));
}

TEST_CASE("tadp_solve approximates exact softmax values on a small reach task") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);

    TadpConfig config;
    config.alpha = 60.0;
    config.seed = 7;
    config.model_samples = 512;
    config.level_epoch_cap = 1200;
    config.stable_epochs = 40;

    TadpResult result = tadp_solve(fx.structure, fx.sim, fx.d, fx.basis, config);

    SolveOptions exact;
    exact.epsilon = 1e-9;
    exact.reward_scale = 0.0;
    exact.accepting_value = config.alpha;
    ValueTable truth = value_iteration(fx.p, exact);

    int q0 = fx.dfa.mode_index("q1");
    double lo = 1e300, hi = -1e300;
    for (int sq : fx.q0_constraint_states()) {
        lo = std::min(lo, truth.values[static_cast<std::size_t>(sq)]);
        hi = std::max(hi, truth.values[static_cast<std::size_t>(sq)]);
    }
    double range = hi - lo;
    REQUIRE(range > 1.0);
    for (int sq : fx.q0_constraint_states()) {
        double approx = result.approx.value(fx.structure.mdp_state_of[static_cast<std::size_t>(sq)], q0);
        CHECK(std::abs(approx - truth.values[static_cast<std::size_t>(sq)]) <= 0.10 * range);
    }

    // feasibility: the converged approximation respects the Bellman constraint
    REQUIRE(!result.levels.empty());
    CHECK(result.levels.back().max_residual <= 1e-2 * config.alpha);
}

TEST_CASE("tadp upper-bound tendency under a tight residual") {
    ReachFixture fx(3, 1, {2, 0}, 0.9, 2.0);

    TadpConfig config;
    config.alpha = 60.0;
    config.seed = 5;
    config.model_samples = 2048;
    config.level_epoch_cap = 1600;
    config.stable_epochs = 40;
    config.feasibility_tol = 1e-3 / config.alpha;  // drive max B(g) toward 1e-3

    TadpResult result = tadp_solve(fx.structure, fx.sim, fx.d, fx.basis, config);

    SolveOptions exact;
    exact.epsilon = 1e-10;
    exact.reward_scale = 0.0;
    exact.accepting_value = config.alpha;
    ValueTable truth = value_iteration(fx.p, exact);

    if (result.levels.back().max_residual <= 1e-3) {
        int q0 = fx.dfa.mode_index("q1");
        for (int sq : fx.q0_constraint_states()) {
            double approx =
                result.approx.value(fx.structure.mdp_state_of[static_cast<std::size_t>(sq)], q0);
            CHECK(approx >= truth.values[static_cast<std::size_t>(sq)] - 1e-2 * config.alpha);
        }
    } else {
        // precondition unattained; report rather than assert vacuously
        MESSAGE("residual ", result.levels.back().max_residual, " did not reach 1e-3");
    }
}

TEST_CASE("later-level weights stay untouched while earlier levels train") {
    GridWorldSpec spec;
    spec.width = 3;
    spec.height = 3;
    spec.noise = 0.05;
    spec.regions["a"] = {{0, 2}};
    spec.regions["goal"] = {{2, 2}};
    LabeledMdp m = build_grid_world(spec);
    // two milestones: see a, then goal
    TaskDfa dfa = parse_dfa(R"(
props: a goal
states: q1 q2 q3
initial: q1
accepting: q3
default_self_loop: true
trans: q1 -> q2 : a & !goal
trans: q2 -> q3 : goal
trans: q3 -> q3 : true
)");
    Decomposition d = decompose(m, dfa);
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});
    ProductStructure structure = extract_structure(p);
    KernelBasis basis(m, grid_centers(spec, 1), 1.0);

    TadpConfig config;
    config.alpha = 60.0;
    config.seed = 13;
    config.level_epoch_cap = 300;
    config.stable_epochs = 20;
    int q1_state = structure.index_of(spec.cell_index({1, 1}), dfa.mode_index("q1"));
    int q2_state = structure.index_of(spec.cell_index({1, 1}), dfa.mode_index("q2"));
    config.trace_states = {q1_state, q2_state};

    TadpResult result = tadp_solve(p, d, basis, config);

    // level 1 trains q2 while q1 (level 2) still reads as theta_init = 0
    REQUIRE(result.levels.size() == 3);
    long long level1_epochs = result.levels[1].epochs;
    REQUIRE(level1_epochs > 0);
    std::size_t q1_col = 0;
    while (result.trace.states[q1_col] != q1_state) ++q1_col;
    for (long long epoch = 0; epoch < level1_epochs; ++epoch) {
        CHECK(result.trace.values[static_cast<std::size_t>(epoch)][q1_col] == 0.0);
    }
}

TEST_CASE("tadp runs are deterministic under a fixed seed") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);
    TadpConfig config;
    config.alpha = 60.0;
    config.seed = 99;
    config.level_epoch_cap = 200;
    config.stable_epochs = 20;

    TadpResult a = tadp_solve(fx.structure, fx.sim, fx.d, fx.basis, config);
    TadpResult b = tadp_solve(fx.structure, fx.sim, fx.d, fx.basis, config);
    CHECK(a.total_epochs == b.total_epochs);
    CHECK(a.trace.values == b.trace.values);
    CHECK(a.approx.theta == b.approx.theta);
    CHECK(a.policy.dist == b.policy.dist);

    // the returned policy is a distribution at every product state
    for (const auto& row : a.policy.dist) {
        double sum = 0;
        for (double x : row) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("multipliers never decrease across outer updates") {
    LagrangianState ls;
    ls.lambda = 0.0;
    ls.nu = 2.0;
    ls.b = 1.5;
    Rng rng(6);
    for (int k = 0; k < 30; ++k) {
        double before = ls.lambda;
        update_multipliers(ls, rng.uniform01());  // B(g) is nonnegative
        CHECK(ls.lambda >= before);
    }
}

TEST_CASE("model-free firewall: a probed product records zero reads during the solve") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);

    std::atomic<long long> reads{0};
    fx.p.attach_read_probe(&reads);
    TadpConfig config;
    config.alpha = 60.0;
    config.seed = 3;
    config.level_epoch_cap = 120;
    config.stable_epochs = 10;
    TadpResult result = tadp_solve(fx.structure, fx.sim, fx.d, fx.basis, config);
    fx.p.attach_read_probe(nullptr);

    CHECK(reads.load() == 0);
    CHECK(result.total_epochs > 0);
}

TEST_CASE("divergence guard reports the failing level") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);
    TadpConfig config;
    config.alpha = 60.0;
    config.seed = 17;
    config.eta = 1e7;
    config.grad_clip = 0.0;
    config.theta_bound = 1e3;
    CHECK_THROWS_WITH_AS(tadp_solve(fx.structure, fx.sim, fx.d, fx.basis, config),
                         doctest::Contains("level"), SolverError);
}

TEST_CASE("reward-substitution variant solves the small reach task too") {
    ReachFixture fx(3, 3, {2, 2}, 0.9, 2.0);
    TadpConfig config;
    config.alpha = 60.0;
    config.seed = 23;
    config.reward_substitution = true;
    config.level_epoch_cap = 800;
    config.stable_epochs = 30;
    TadpResult result = tadp_solve(fx.structure, fx.sim, fx.d, fx.basis, config);
    CHECK(result.total_epochs > 0);
    // boundary-adjacent values must exceed the far corner's
    int q0 = fx.dfa.mode_index("q1");
    double near = result.approx.value(fx.spec.cell_index({2, 1}), q0);
    double far = result.approx.value(fx.spec.cell_index({0, 0}), q0);
    CHECK(near > far);
}
