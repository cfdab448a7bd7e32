#include <doctest.h>

#include <cmath>
#include <vector>

#include "ucrl/agents.hpp"
#include "ucrl/environments.hpp"
#include "ucrl/rng.hpp"
#include "test_util.hpp"

using namespace ucrl;

TEST_CASE("tabular agent: initial tables and the first plan") {
    TabularAgent agent(3, 2, 4);
    for (int h = 1; h <= 4; ++h)
        for (std::int64_t s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) CHECK(agent.q(h, s, a) == 4.0);

    agent.plan();
    // nothing visited: min(H, 1 + 0 + H) = H below the last stage, r-estimate at it
    for (std::int64_t s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) {
            for (int h = 1; h <= 3; ++h) CHECK(agent.q(h, s, a) == 4.0);
            CHECK(agent.q(4, s, a) == 1.0);
        }
}

TEST_CASE("tabular agent: single pair, single stage") {
    TabularAgent agent(1, 1, 1);
    agent.observe(TransitionRecord{finite_state(0), 0, finite_state(0), 0.4, 1, 1});
    agent.plan();
    CHECK(agent.q(1, 0, 0) == 0.4);
    CHECK(agent.act(0, 1) == 0);
}

TEST_CASE("tabular agent: fully observed tables equal exact dp") {
    Environment env = test::table_env({{1, 0}, {1, 1}}, {{0.3, 0.8}, {0.1, 0.9}}, 3);
    TabularAgent agent(2, 2, 3);
    for (std::int64_t s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) {
            auto [ns, r] = step(env, finite_state(s), a);
            agent.observe(TransitionRecord{finite_state(s), a, ns, r, 1, 1});
        }
    agent.plan();
    ValueSolution sol = exact_dp(env);
    for (int h = 1; h <= 3; ++h)
        for (std::int64_t s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(agent.q(h, s, a) == sol.q_at(h, finite_state(s), a));
}

TEST_CASE("tabular act breaks ties toward the lowest index") {
    TabularAgent fresh(2, 3, 2);
    CHECK(fresh.act(0, 1) == 0); // all equal

    // one state, three actions, one stage: q becomes the observed rewards
    TabularAgent agent(1, 3, 1);
    double rewards[3] = {0.1, 0.9, 0.9};
    for (int a = 0; a < 3; ++a)
        agent.observe(TransitionRecord{finite_state(0), a, finite_state(0), rewards[a], 1, 1});
    agent.plan();
    CHECK(agent.act(0, 1) == 1); // first maximizer
}

TEST_CASE("tabular observe: first visit, idempotent revisit, contradiction") {
    TabularAgent agent(2, 1, 3);
    TransitionRecord t{finite_state(0), 0, finite_state(1), 0.5, 1, 1};
    CHECK_FALSE(agent.visited(0, 0));
    agent.observe(t);
    CHECK(agent.visited(0, 0));
    agent.observe(t); // identical outcome: no change, no complaint
    CHECK(agent.visited(0, 0));

    TransitionRecord bad_reward = t;
    bad_reward.reward = 0.6;
    CHECK_THROWS_AS(agent.observe(bad_reward), DeterminismViolation);
    TransitionRecord bad_next = t;
    bad_next.next_state = finite_state(0);
    CHECK_THROWS_AS(agent.observe(bad_next), DeterminismViolation);
    TransitionRecord out_of_range = t;
    out_of_range.reward = 1.5;
    CHECK_THROWS_AS(agent.observe(out_of_range), ContractViolation);
}

TEST_CASE("ucrlfa_recompute: empty buffer gives the stage caps") {
    Environment env = test::single_pair_env(0.5, 4);
    ExperienceBuffer buffer;
    LayeredQEstimate est = ucrlfa_recompute(buffer, env.metric, 1.0, 1, 4);
    for (int h = 1; h <= 4; ++h)
        CHECK(est.evaluate(h, finite_state(0), 0) == static_cast<double>(4 - h + 1));
}

TEST_CASE("ucrlfa_recompute: one absorbing unit-reward record, two stages") {
    Environment env = test::single_pair_env(1.0, 2);
    ExperienceBuffer buffer;
    buffer.append_episode(test::roll_out(env, {0, 0}, 1), 2);
    LayeredQEstimate est = ucrlfa_recompute(buffer, env.metric, 1.0, 1, 2);
    CHECK(est.evaluate(2, finite_state(0), 0) == 1.0);
    CHECK(est.evaluate(1, finite_state(0), 0) == 2.0);
}

TEST_CASE("ucrlfa act mirrors the evaluators") {
    Environment env = test::single_pair_env(0.5, 3);
    ExperienceBuffer buffer;
    LayeredQEstimate fresh = ucrlfa_recompute(buffer, env.metric, 1.0, 1, 3);
    CHECK(fresh.act(1, finite_state(0)) == 0); // all equal, lowest index

    Environment chain = test::table_env({{0, 1}, {1, 1}}, {{0.2, 0.9}, {0.5, 0.1}}, 2);
    ExperienceBuffer chain_buffer;
    for (int a = 0; a < 2; ++a)
        for (std::int64_t s = 0; s < 2; ++s) {
            auto [ns, r] = step(chain, finite_state(s), a);
            std::vector<TransitionRecord> traj{
                TransitionRecord{finite_state(s), a, ns, r, 1, 1},
                TransitionRecord{ns, 0, state_index(ns) == 0 ? finite_state(0) : finite_state(1),
                                 chain.reward(ns, 0), 1, 2}};
            chain_buffer.append_episode(traj, 2);
        }
    LayeredQEstimate est = ucrlfa_recompute(chain_buffer, chain.metric, 1.0, 2, 2);
    for (std::int64_t s = 0; s < 2; ++s) {
        int choice = est.act(2, finite_state(s));
        double best = est.evaluate(2, finite_state(s), 0);
        int expect = 0;
        for (int a = 1; a < 2; ++a)
            if (est.evaluate(2, finite_state(s), a) > best) {
                best = est.evaluate(2, finite_state(s), a);
                expect = a;
            }
        CHECK(choice == expect);
    }
}

TEST_CASE("with the discrete metric and H=2 the recomputed tables match the tabular planner") {
    Environment env = make_finite_random(19, 5, 2, 2);
    TabularAgent tab(5, 2, 2);
    ExperienceBuffer buffer;
    Rng rng(3);
    for (int k = 1; k <= 12; ++k) {
        // drive both with the same externally chosen trajectory
        std::vector<int> actions{static_cast<int>(rng.index(2)), static_cast<int>(rng.index(2))};
        auto trajectory = test::roll_out(env, actions, k);
        for (const auto& t : trajectory) tab.observe(t);
        buffer.append_episode(trajectory, 2);
        tab.plan();
        LayeredQEstimate est = ucrlfa_recompute(buffer, env.metric, 1.0, 2, 2);
        for (std::int64_t s = 0; s < 5; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(est.evaluate(1, finite_state(s), a) == tab.q(1, s, a));
        for (std::int64_t s = 0; s < 5; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(est.evaluate(2, finite_state(s), a) == tab.q(2, s, a));
    }
}

TEST_CASE("deeper horizons: recomputed values at visited pairs never exceed the tabular ones") {
    // the stage caps H-h+1 are tighter than the tabular planner's flat H, so
    // mid-training the recomputed estimate can only be lower at visited pairs
    Environment env = make_finite_random(29, 6, 2, 4);
    ValueSolution sol = exact_dp(env);
    TabularAgent tab(6, 2, 4);
    ExperienceBuffer buffer;
    Rng rng(5);
    for (int k = 1; k <= 20; ++k) {
        std::vector<int> actions;
        for (int h = 0; h < 4; ++h) actions.push_back(static_cast<int>(rng.index(2)));
        auto trajectory = test::roll_out(env, actions, k);
        for (const auto& t : trajectory) tab.observe(t);
        buffer.append_episode(trajectory, 4);
        tab.plan();
        LayeredQEstimate est = ucrlfa_recompute(buffer, env.metric, 1.0, 2, 4);
        for (const auto& rec : buffer.records()) {
            std::int64_t s = state_index(rec.state);
            for (int h = 1; h <= 4; ++h) {
                double nn = est.evaluate(h, rec.state, rec.action);
                CHECK(nn <= tab.q(h, s, rec.action) + 1e-12);
                CHECK(nn + 1e-9 >= sol.q_at(h, rec.state, rec.action)); // both stay optimistic
            }
        }
    }
}

TEST_CASE("run_training: single-choice environment has zero regret from episode one") {
    Environment env = test::single_pair_env(0.3, 1);
    ValueSolution sol = exact_dp(env);
    RunOptions opts;
    opts.episodes = 5;
    opts.v_star_initial = sol.v_star_initial;
    RunResult result = run_training(AgentKind::tabular, env, opts);
    for (const auto& row : result.ledger.rows) CHECK(row.instant_regret == 0.0);
}

TEST_CASE("run_training tabular: theorem-style bounds on a small environment") {
    Environment env = make_finite_random(101, 3, 2, 4);
    ValueSolution sol = exact_dp(env);
    RunOptions opts;
    opts.episodes = 4 * 3 * 2;
    opts.v_star_initial = sol.v_star_initial;
    opts.oracle = &sol;
    opts.check_optimism = true;
    RunResult result = run_training(AgentKind::tabular, env, opts);

    CHECK(result.ledger.cumulative() <= 3 * 2 * 4 + 1e-6);
    int positive = 0;
    for (const auto& row : result.ledger.rows) {
        if (row.instant_regret > 1e-9) ++positive;
        CHECK(row.instant_regret >= -1e-9);
        CHECK(row.buffer_size == row.episode * 4);
    }
    CHECK(positive <= 3 * 2);
    CHECK(result.optimism_ok);
    CHECK(result.min_optimism_margin >= -1e-6);
}

TEST_CASE("run_training ucrl: optimism and induction hold on finite environments") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Environment env = make_finite_random(seed, 6, 3, 4);
        ValueSolution sol = exact_dp(env);
        RunOptions opts;
        opts.episodes = 2 * 6 * 3;
        opts.v_star_initial = sol.v_star_initial;
        opts.oracle = &sol;
        opts.check_optimism = true;
        opts.check_induction = true;
        RunResult result = run_training(AgentKind::ucrl_fa_nn, env, opts);
        CHECK(result.optimism_ok);
        CHECK(result.induction_ok);
        CHECK(result.min_optimism_margin >= -1e-6);
        CHECK(result.min_induction_margin >= -1e-6);
        for (const auto& check : result.episode_checks)
            CHECK(check.regret_decomposition_margin >= -1e-6);
        CHECK(result.ledger.cumulative() <= 6.0 * 3 * 4 + 1e-6);
    }
}

TEST_CASE("run_training ucrl on the line world: per-step induction holds") {
    Environment env = make_line_world(6, 3, 3);
    ValueSolution sol = grid_dp(env, 1e-3);
    RunOptions opts;
    opts.episodes = 40;
    opts.v_star_initial = sol.v_star_initial;
    opts.oracle = &sol;
    opts.check_optimism = true;
    opts.check_induction = true;
    opts.optimism_every = 10;
    RunResult result = run_training(AgentKind::ucrl_fa_nn, env, opts);
    CHECK(result.induction_ok);
    CHECK(result.min_induction_margin >= -1e-6);
    // optimism against the grid oracle carries the discretization slack
    CHECK(result.optimism_ok);
    for (const auto& row : result.ledger.rows)
        CHECK(row.instant_regret >= -(1e-9 + sol.error_bound));
}

TEST_CASE("run_training is bitwise deterministic") {
    Environment env = make_line_world(14, 3, 3);
    ValueSolution sol = grid_dp(env, 1e-2);
    RunOptions opts;
    opts.episodes = 25;
    opts.v_star_initial = sol.v_star_initial;
    RunResult a = run_training(AgentKind::ucrl_fa_nn, env, opts);
    RunResult b = run_training(AgentKind::ucrl_fa_nn, env, opts);
    REQUIRE(a.ledger.rows.size() == b.ledger.rows.size());
    for (std::size_t i = 0; i < a.ledger.rows.size(); ++i) {
        CHECK(a.ledger.rows[i].episode_reward == b.ledger.rows[i].episode_reward);
        CHECK(a.ledger.rows[i].instant_regret == b.ledger.rows[i].instant_regret);
        CHECK(a.ledger.rows[i].cumulative_regret == b.ledger.rows[i].cumulative_regret);
        CHECK(a.ledger.rows[i].buffer_size == b.ledger.rows[i].buffer_size);
    }
}

TEST_CASE("run_training linear agent: span regret bound on cluster environments") {
    for (std::uint64_t seed : {4ull, 9ull, 23ull}) {
        auto [env, spec] = make_cluster_linear(seed, 5, 3, 3, 4);
        ValueSolution sol = exact_dp(env);
        RunOptions opts;
        opts.episodes = 3 * 5 + 5;
        opts.v_star_initial = sol.v_star_initial;
        RunResult result = run_training(AgentKind::ucrl_fa_linear, env, opts);
        CHECK(result.ledger.cumulative() <= 4.0 * 5 + 1e-6);
        int positive = 0;
        for (const auto& row : result.ledger.rows)
            if (row.instant_regret > 1e-9) ++positive;
        CHECK(positive <= 5);
    }
}

TEST_CASE("run_training on a hard instance: forced exploration then a plateau") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto [env, spec] = make_hard_instance(seed, 18, 2, 8);
        ValueSolution sol = exact_dp(env);
        const int full = static_cast<int>(spec.leaf_count) * 2;

        RunOptions opts;
        opts.episodes = full + 4;
        opts.v_star_initial = sol.v_star_initial;
        RunResult result = run_training(AgentKind::ucrl_fa_nn, env, opts);

        // regret at the half-exploration point dominates the reference line
        double at_half = result.ledger.rows[static_cast<std::size_t>(full / 2 - 1)].cumulative_regret;
        CHECK(at_half >= 0.4 * (full / 2) * (8 - spec.tree_depth));

        // plateau: once every leaf pair is ruled out the policy is optimal
        int last_positive = 0;
        for (const auto& row : result.ledger.rows)
            if (row.instant_regret > 1e-9) last_positive = row.episode;
        CHECK(last_positive <= full + 1);
    }
}

TEST_CASE("run_training accepts a misspecified Lipschitz override") {
    Environment env = make_line_world(21, 3, 3);
    ValueSolution sol = grid_dp(env, 1e-2);
    RunOptions opts;
    opts.episodes = 15;
    opts.v_star_initial = sol.v_star_initial;
    opts.oracle = &sol;
    opts.check_optimism = true;
    opts.l1_override = 0.05; // far below the declared constant
    RunResult result = run_training(AgentKind::ucrl_fa_nn, env, opts);
    CHECK(result.ledger.rows.size() == 15); // the run completes and reports
}

TEST_CASE("run_training contract violations") {
    Environment env = make_line_world(2, 3, 3);
    RunOptions opts;
    opts.episodes = 3;
    CHECK_THROWS_AS((void)run_training(AgentKind::tabular, env, opts), ContractViolation);
    CHECK_THROWS_AS((void)run_training(AgentKind::ucrl_fa_linear, env, opts), ContractViolation);
    opts.episodes = 0;
    CHECK_THROWS_AS((void)run_training(AgentKind::ucrl_fa_nn, env, opts), ContractViolation);
}
