#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "test_util.hpp"
#include "topoplan/errors.hpp"
#include "topoplan/product.hpp"

using namespace topoplan;

TEST_CASE("case-study product: size, initial state, absorbing accepting rows") {
    LabeledMdp m = build_grid_world(load_case_world_spec());
    TaskDfa dfa = load_case_dfa();
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});

    CHECK(p.n_states() == 500);
    CHECK(p.warnings().empty());

    // initial cell (0,0) carries no label, so the initial mode stays q1
    CHECK(p.mdp_state_of(p.initial()) == m.initial);
    CHECK(p.mode_of(p.initial()) == dfa.mode_index("q1"));

    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (!p.is_accepting(sq)) continue;
        for (int a = 0; a < p.n_actions(); ++a) {
            const auto& row = p.transitions(sq, a);
            REQUIRE(row.size() == 1);
            CHECK(row[0].state == sq);
            CHECK(row[0].prob == 1.0);
            CHECK(p.reward(sq, a) == 0.0);
        }
    }
}

TEST_CASE("already-accepting product of one state") {
    GridWorldSpec spec;
    spec.width = spec.height = 1;
    spec.noise = 0.0;
    spec.regions["goal"] = {{0, 0}};
    LabeledMdp m = build_grid_world(spec);
    TaskDfa dfa = load_reach_dfa();
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 1.0, .prune_unreachable = true});

    CHECK(p.n_states() == 1);
    CHECK(p.is_accepting(p.initial()));
    CHECK(p.reward(p.initial(), 0) == 0.0);
}

TEST_CASE("two-state chain reward expands as P into accepting modes") {
    const char* text = R"(
states 2
actions 1
initial 0
props goal
label 1 goal
trans 0 0 1 1.0
trans 1 0 1 1.0
)";
    LabeledMdp m = parse_mdp_text(text);
    TaskDfa dfa = load_reach_dfa();
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 1.0});

    int s0q0 = p.index_of(0, dfa.mode_index("q1"));
    int s1qf = p.index_of(1, dfa.mode_index("q2"));
    REQUIRE(s0q0 >= 0);
    REQUIRE(s1qf >= 0);
    CHECK(p.reward(s0q0, 0) == doctest::Approx(1.0));
    CHECK(p.reward(s1qf, 0) == 0.0);
}

TEST_CASE("reward equals one-step probability of entering S x F") {
    const char* text = R"(
states 3
actions 1
initial 0
props goal
label 1 goal
trans 0 0 1 0.97
trans 0 0 2 0.03
trans 1 0 1 1.0
trans 2 0 2 1.0
)";
    LabeledMdp m = parse_mdp_text(text);
    ProductMdp p = build_product(m, load_reach_dfa(), {.gamma = 0.9, .tau = 1.0});
    int start = p.index_of(0, 0);
    CHECK(p.reward(start, 0) == doctest::Approx(0.97));
    CHECK(product_reward(p, start, 0) == p.reward(start, 0));

    // the sink state never enters S x F, so its reward is exactly 0
    int sink = p.index_of(2, 0);
    REQUIRE(sink >= 0);
    CHECK(product_reward(p, sink, 0) == 0.0);
}

TEST_CASE("projection consistency: marginalizing modes recovers the MDP row") {
    LabeledMdp m = build_grid_world(load_case_world_spec());
    TaskDfa dfa = load_case_dfa();
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});

    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) continue;
        int s = p.mdp_state_of(sq);
        for (int a = 0; a < p.n_actions(); ++a) {
            std::map<int, double> marginal;
            for (const Outcome& o : p.transitions(sq, a)) {
                marginal[p.mdp_state_of(o.state)] += o.prob;
            }
            const auto& original = m.distribution(s, a);
            REQUIRE(marginal.size() == original.size());
            for (const Outcome& o : original) {
                CHECK(marginal.at(o.state) == o.prob);  // exact: probabilities are copied
            }
        }
    }
}

TEST_CASE("mode updates follow delta on the entered state's label") {
    LabeledMdp m = build_grid_world(load_case_world_spec());
    TaskDfa dfa = load_case_dfa();
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});

    for (int sq = 0; sq < p.n_states(); ++sq) {
        if (p.is_accepting(sq)) continue;
        int q = p.mode_of(sq);
        for (int a = 0; a < p.n_actions(); ++a) {
            for (const Outcome& o : p.transitions(sq, a)) {
                if (o.prob <= 0) continue;
                int s2 = p.mdp_state_of(o.state);
                PropMask sym = m.props.project(m.labels[static_cast<std::size_t>(s2)], dfa.props);
                CHECK(p.mode_of(o.state) == dfa.step(q, sym));
            }
        }
    }
}

TEST_CASE("rewards stay in [0,1] and vanish on accepting states") {
    LabeledMdp m = build_grid_world(load_case_world_spec());
    ProductMdp p = build_product(m, load_case_dfa(), {.gamma = 0.9, .tau = 2.0});
    for (int sq = 0; sq < p.n_states(); ++sq) {
        for (int a = 0; a < p.n_actions(); ++a) {
            double r = p.reward(sq, a);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            if (p.is_accepting(sq)) CHECK(r == 0.0);
        }
    }
}

TEST_CASE("pruning keeps only states reachable from the product initial") {
    LabeledMdp m = build_grid_world(load_case_world_spec());
    TaskDfa dfa = load_case_dfa();
    ProductMdp full = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});
    ProductMdp pruned = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0, .prune_unreachable = true});

    CHECK(pruned.n_states() <= full.n_states());
    CHECK(pruned.n_states() > 0);
    CHECK(pruned.mdp_state_of(pruned.initial()) == m.initial);
    for (int sq = 0; sq < pruned.n_states(); ++sq) {
        for (int a = 0; a < pruned.n_actions(); ++a) {
            double sum = 0;
            for (const Outcome& o : pruned.transitions(sq, a)) {
                CHECK(o.state >= 0);
                sum += o.prob;
            }
            CHECK(std::abs(sum - 1.0) <= kRowSumTolerance);
        }
    }
}

TEST_CASE("build_product validates its inputs") {
    LabeledMdp m = build_grid_world(load_case_world_spec());
    TaskDfa dfa = load_case_dfa();
    CHECK_THROWS_AS(build_product(m, dfa, {.gamma = 1.0, .tau = 2.0}), ValidationError);
    CHECK_THROWS_AS(build_product(m, dfa, {.gamma = 0.9, .tau = 0.0}), ValidationError);

    // propositions not present in the MDP
    TaskDfa alien = parse_dfa(R"(
props: zz
states: q0 q1
initial: q0
accepting: q1
default_self_loop: true
trans: q0 -> q1 : zz
)");
    CHECK_THROWS_AS(build_product(m, alien, {.gamma = 0.9, .tau = 2.0}), ValidationError);
}

TEST_CASE("untrimmed DFA triggers a build warning") {
    GridWorldSpec spec;
    spec.width = 2;
    spec.height = 1;
    spec.noise = 0.0;
    spec.regions["a"] = {{1, 0}};
    spec.regions["b"] = {};
    LabeledMdp m = build_grid_world(spec);
    TaskDfa dfa = parse_dfa(R"(
props: a b
states: q0 q1 qbad
initial: q0
accepting: q1
default_self_loop: true
trans: q0 -> q1 : a & !b
trans: q0 -> qbad : b & !a
trans: qbad -> qbad : true
)");
    ProductMdp p = build_product(m, dfa, {.gamma = 0.9, .tau = 2.0});
    REQUIRE(p.warnings().size() == 1);
    CHECK(p.warnings()[0].find("coaccessible") != std::string::npos);
}

TEST_CASE("product dump is deterministic text") {
    GridWorldSpec spec;
    spec.width = 2;
    spec.height = 1;
    spec.noise = 0.1;
    spec.regions["goal"] = {{1, 0}};
    LabeledMdp m = build_grid_world(spec);
    ProductMdp p = build_product(m, load_reach_dfa(), {.gamma = 0.9, .tau = 1.0});
    std::ostringstream a, b;
    dump_product(p, a);
    dump_product(p, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("trans") != std::string::npos);
}
