#include <doctest.h>

#include <cmath>

#include "ucrl/dp.hpp"
#include "ucrl/environments.hpp"
#include "ucrl/mdp.hpp"
#include "ucrl/rng.hpp"
#include "test_util.hpp"

using namespace ucrl;

TEST_CASE("step on an absorbing self-loop") {
    Environment env = test::single_pair_env(0.5, 3);
    auto [ns, r] = step(env, env.initial_state, 0);
    CHECK(states_equal(ns, env.initial_state));
    CHECK(r == 0.5);
}

TEST_CASE("step clips at the line-world boundary") {
    Environment env = make_line_world(3, 3, 3); // actions -0.25, 0, +0.25
    auto [ns, r] = step(env, real_state(0.9), 2);
    CHECK(state_coords(ns)[0] == 1.0);
    CHECK(r == env.reward(real_state(0.9), 2));
}

TEST_CASE("step at the hard-instance root: action 0 walks left with zero reward") {
    auto [env, spec] = make_hard_instance(11, 10, 2, 8);
    auto [ns, r] = step(env, env.initial_state, 0);
    CHECK(state_index(ns) == 1);
    CHECK(r == 0.0);
}

TEST_CASE("step validates the action index and the reward range") {
    Environment env = test::single_pair_env(0.5, 3);
    CHECK_THROWS_AS((void)step(env, env.initial_state, 1), ContractViolation);
    CHECK_THROWS_AS((void)step(env, env.initial_state, -1), ContractViolation);

    Environment bad = test::single_pair_env(1.5, 3); // reward out of range
    CHECK_THROWS_AS((void)step(bad, bad.initial_state, 0), EnvironmentIntegrityError);
}

TEST_CASE("append_episode grows by exactly H and keeps duplicates") {
    Environment env = test::single_pair_env(0.5, 3);
    ExperienceBuffer buffer;
    auto trajectory = test::roll_out(env, {0, 0, 0}, 1);
    buffer.append_episode(trajectory, 3);
    CHECK(buffer.size() == 3);
    buffer.append_episode(trajectory, 3);
    CHECK(buffer.size() == 6);

    // identical trajectory appended again: still +H, no dedup
    buffer.append_episode(trajectory, 3);
    CHECK(buffer.size() == 9);

    CHECK_THROWS_AS(buffer.append_episode({}, 3), ContractViolation);
    auto short_traj = trajectory;
    short_traj.pop_back();
    CHECK_THROWS_AS(buffer.append_episode(short_traj, 3), ContractViolation);
}

TEST_CASE("episode_regret arithmetic") {
    CHECK(episode_regret(5.0, {1.0, 1.0, 1.0}) == 2.0);
    CHECK(episode_regret(3.0, {1.0, 1.0, 1.0}) == 0.0);
    CHECK(episode_regret(0.3, {}) == 0.3);
}

TEST_CASE("an episode that misses the star pair pays the full optimal value") {
    auto [env, spec] = make_hard_instance(6, 10, 2, 8);
    ValueSolution sol = exact_dp(env);
    std::vector<double> zeros(8, 0.0);
    CHECK(episode_regret(sol.v_star_initial, zeros) == static_cast<double>(8 - spec.star_depth));
}

TEST_CASE("nearest_gap") {
    Environment env = test::single_pair_env(0.5, 4);
    ExperienceBuffer buffer;
    Metric metric = Metric::discrete(4.0);

    SUBCASE("empty buffer is an infinite gap") {
        CHECK(std::isinf(nearest_gap(buffer, StateAction{finite_state(0), 0}, metric)));
    }
    SUBCASE("zero at a buffered pair, H at an unseen one, min otherwise") {
        buffer.append_episode(test::roll_out(env, {0, 0, 0, 0}, 1), 4);
        CHECK(nearest_gap(buffer, StateAction{finite_state(0), 0}, metric) == 0.0);
        CHECK(nearest_gap(buffer, StateAction{finite_state(1), 0}, metric) == 4.0);

        Metric custom = Metric::custom([](const StateAction& x, const StateAction&) {
            return state_index(x.state) == 7 ? 0.2 : 1.0;
        });
        CHECK(nearest_gap(buffer, StateAction{finite_state(7), 0}, custom) == 0.2);
    }
}

TEST_CASE("weighted_l1 metric is a pseudometric on sampled triples") {
    Environment env = make_line_world(5, 4, 3);
    const Metric& metric = env.metric;
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        StateAction x{real_state(rng.uniform()), static_cast<int>(rng.index(4))};
        StateAction y{real_state(rng.uniform()), static_cast<int>(rng.index(4))};
        StateAction z{real_state(rng.uniform()), static_cast<int>(rng.index(4))};
        CHECK(metric(x, y) == metric(y, x));
        CHECK(metric(x, z) <= metric(x, y) + metric(y, z) + 1e-12);
        CHECK(metric(x, x) == 0.0);
    }
}

TEST_CASE("discrete metric is a pseudometric") {
    Metric metric = Metric::discrete(6.0);
    StateAction x{finite_state(0), 0}, y{finite_state(1), 0}, z{finite_state(0), 1};
    CHECK(metric(x, x) == 0.0);
    CHECK(metric(x, y) == 6.0);
    CHECK(metric(x, y) == metric(y, x));
    CHECK(metric(x, z) <= metric(x, y) + metric(y, z));
}

TEST_CASE("ledger cumulative regret is the exact running sum") {
    RegretLedger ledger;
    Rng rng(4);
    for (int k = 1; k <= 50; ++k)
        ledger.add(k, rng.uniform(), rng.uniform(), k * 3, 0.0);
    double sum = 0.0;
    for (const auto& row : ledger.rows) {
        sum += row.instant_regret;
        CHECK(row.cumulative_regret == sum); // bitwise: same association
    }
}

TEST_CASE("combined Lipschitz constant is exactly (l2+1)*l1") {
    LipschitzConstants c{0.3, 2.0};
    CHECK(c.combined() == (2.0 + 1.0) * 0.3);
}
