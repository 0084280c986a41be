#include <doctest.h>

#include <cmath>
#include <map>

#include "test_util.hpp"
#include "topoplan/product.hpp"
#include "topoplan/rollout.hpp"
#include "topoplan/simulator.hpp"
#include "topoplan/solvers.hpp"

using namespace topoplan;

namespace {

struct CaseSetup {
    LabeledMdp m;
    TaskDfa dfa;
    ProductMdp p;
    ProductStructure structure;

    CaseSetup()
        : m(build_grid_world(load_case_world_spec())),
          dfa(load_case_dfa()),
          p(build_product(m, dfa, {.gamma = 0.9, .tau = 2.0})),
          structure(extract_structure(p)) {}
};

}  // namespace

TEST_CASE("snapshot simulator reproduces the row distribution empirically") {
    CaseSetup cs;
    SnapshotSimulator sim(cs.p);
    int sq = cs.p.initial();
    const auto& row = cs.p.transitions(sq, kUp);

    Rng rng(5);
    std::map<int, int> counts;
    const int n = 20000;
    for (int i = 0; i < n; ++i) ++counts[sim.sample_step(sq, kUp, rng).next_state];
    for (const Outcome& o : row) {
        double freq = static_cast<double>(counts[o.state]) / n;
        CHECK(freq == doctest::Approx(o.prob).epsilon(0.15));
    }
}

TEST_CASE("trajectories terminate correctly and replay byte-identically") {
    CaseSetup cs;
    SnapshotSimulator sim(cs.p);
    SolveOptions opts;
    opts.epsilon = 1e-3;
    opts.reward_scale = 60.0;
    ValueTable t = value_iteration(cs.p, opts);
    SoftPolicy policy = extract_policy(cs.p, t.values, opts);

    SUBCASE("accepting start gives a length-0 accepting trajectory") {
        int acc = -1;
        for (int sq = 0; sq < cs.p.n_states(); ++sq) {
            if (cs.p.is_accepting(sq)) acc = sq;
        }
        REQUIRE(acc >= 0);
        Rng rng(1);
        Trajectory tr = sample_trajectory(sim, cs.structure, policy, acc, 50, rng);
        CHECK(tr.steps.empty());
        CHECK(tr.terminated == Termination::accepting);
    }

    SUBCASE("fixed seeds replay the same trajectory") {
        for (std::uint64_t seed : {1ull, 42ull, 9001ull}) {
            Rng a(seed), b(seed);
            Trajectory ta = sample_trajectory(sim, cs.structure, policy, cs.p.initial(), 200, a);
            Trajectory tb = sample_trajectory(sim, cs.structure, policy, cs.p.initial(), 200, b);
            REQUIRE(ta.steps.size() == tb.steps.size());
            for (std::size_t i = 0; i < ta.steps.size(); ++i) {
                CHECK(ta.steps[i].state == tb.steps[i].state);
                CHECK(ta.steps[i].action == tb.steps[i].action);
            }
            CHECK(ta.final_state == tb.final_state);
        }
    }

    SUBCASE("deterministic corridor follows the unique path") {
        const char* corridor = R"(
states 3
actions 1
initial 0
props goal
label 2 goal
trans 0 0 1 1.0
trans 1 0 2 1.0
trans 2 0 2 1.0
)";
        LabeledMdp m = parse_mdp_text(corridor);
        ProductMdp p = build_product(m, load_reach_dfa(), {.gamma = 0.9, .tau = 1.0});
        ProductStructure st = extract_structure(p);
        SnapshotSimulator csim(p);
        ValueTable tv = value_iteration(p, {});
        SoftPolicy pol = extract_greedy_policy(p, tv.values, {});
        Rng rng(7);
        Trajectory tr = sample_trajectory(csim, st, pol, p.initial(), 10, rng);
        REQUIRE(tr.steps.size() == 2);
        CHECK(tr.terminated == Termination::accepting);
        CHECK(p.is_accepting(tr.final_state));
    }
}

TEST_CASE("rollout statistics conserve counts and hit the trivial cases") {
    CaseSetup cs;
    SnapshotSimulator sim(cs.p);
    SolveOptions opts;
    opts.epsilon = 1e-3;
    opts.reward_scale = 60.0;
    ValueTable t = value_iteration(cs.p, opts);
    SoftPolicy policy = extract_policy(cs.p, t.values, opts);

    int acc = -1;
    for (int sq = 0; sq < cs.p.n_states(); ++sq) {
        if (cs.p.is_accepting(sq)) acc = sq;
    }
    RolloutStats trivially = simulate_policy(sim, cs.structure, policy, acc, 50, 10, 3);
    CHECK(trivially.success_rate == 1.0);

    RolloutStats stats = simulate_policy(sim, cs.structure, policy, cs.p.initial(), 200, 60, 3);
    CHECK(stats.successes + stats.failures_sink + stats.failures_timeout == stats.n_runs);
    CHECK(stats.n_runs == 200);

    // identical seeds give identical statistics
    RolloutStats again = simulate_policy(sim, cs.structure, policy, cs.p.initial(), 200, 60, 3);
    CHECK(again.successes == stats.successes);
    CHECK(again.failures_sink == stats.failures_sink);
    CHECK(again.failures_timeout == stats.failures_timeout);
}

TEST_CASE("empirical model rows are normalized, cached, and order-independent") {
    CaseSetup cs;
    SnapshotSimulator sim(cs.p);

    EmpiricalModel forward(sim, cs.p.n_actions(), 99, 400);
    EmpiricalModel backward(sim, cs.p.n_actions(), 99, 400);

    std::vector<int> probe_states{cs.p.initial(), cs.p.initial() + 1, cs.p.initial() + 11};
    for (int sq : probe_states) {
        for (int a = 0; a < cs.p.n_actions(); ++a) forward.row(sq, a);
    }
    for (auto it = probe_states.rbegin(); it != probe_states.rend(); ++it) {
        for (int a = cs.p.n_actions() - 1; a >= 0; --a) backward.row(*it, a);
    }

    for (int sq : probe_states) {
        for (int a = 0; a < cs.p.n_actions(); ++a) {
            const auto& fa = forward.row(sq, a);
            const auto& ba = backward.row(sq, a);
            REQUIRE(fa.size() == ba.size());
            double sum = 0;
            for (std::size_t i = 0; i < fa.size(); ++i) {
                CHECK(fa[i].state == ba[i].state);
                CHECK(fa[i].prob == ba[i].prob);
                sum += fa[i].prob;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK(forward.step_calls() == 400 * static_cast<long long>(probe_states.size()) * cs.p.n_actions());

    // empirical frequencies approach the true row
    const auto& truth = cs.p.transitions(cs.p.initial(), kUp);
    const auto& empirical = forward.row(cs.p.initial(), kUp);
    for (const Outcome& o : truth) {
        double got = 0;
        for (const Outcome& e : empirical) {
            if (e.state == o.state) got = e.prob;
        }
        CHECK(std::abs(got - o.prob) < 0.08);
    }
}

TEST_CASE("structure extraction mirrors the product") {
    CaseSetup cs;
    CHECK(cs.structure.n_states == cs.p.n_states());
    CHECK(cs.structure.initial == cs.p.initial());
    for (int sq = 0; sq < cs.p.n_states(); ++sq) {
        CHECK(cs.structure.is_accepting(sq) == cs.p.is_accepting(sq));
        CHECK(cs.structure.mode_of[static_cast<std::size_t>(sq)] == cs.p.mode_of(sq));
        CHECK(cs.structure.index_of(cs.p.mdp_state_of(sq), cs.p.mode_of(sq)) == sq);
    }
}
