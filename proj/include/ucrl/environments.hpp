#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ucrl/mdp.hpp"

namespace ucrl {

// Construction record for a hard exploration instance: a binary tree whose
// leaves all feed an absorbing zero-reward state, except one hidden
// leaf-action pair that feeds an absorbing unit-reward state. Distinct pairs
// sit at metric distance H, so nothing generalizes and each episode can rule
// out at most one leaf pair.
struct HardInstanceSpec {
    std::int64_t n_states = 0;
    int n_actions = 0;
    int horizon = 0;
    int tree_depth = 0;        // ceil(log2(tree size))
    std::int64_t leaf_count = 0;
    std::int64_t star_leaf = 0;
    int star_action = 0;
    int star_depth = 0;        // steps from the root to acting at the star leaf
    std::int64_t absorbing_reward_state = 0;
    std::int64_t absorbing_null_state = 0;
    std::uint64_t seed = 0;
};

// Construction record for a linear-feature environment: state-action pairs
// are grouped into d clusters sharing reward and next-cluster, so every Q
// function is constant per cluster and exactly linear in the one-hot
// cluster indicator.
struct ClusterLinearSpec {
    int d = 0;
    int states_per_cluster = 0;
    int n_state_classes = 0;
    std::vector<std::vector<int>> pair_cluster;   // [state][action] -> cluster
    std::vector<std::vector<int>> next_cluster;   // [cluster][action] -> cluster
    std::vector<double> cluster_reward;           // [cluster]
};

// Uniform random deterministic transitions; rewards uniform on [0,1] rounded
// to 3 decimals; discrete metric at distance H.
Environment make_finite_random(std::uint64_t seed, std::int64_t n_states, int n_actions,
                               int horizon);

struct LineWorldParams {
    double slope = 1.0;        // tent steepness; reward is 1 - slope*|s - peak|, floored at 0
    double peak_min = 0.2;     // seed-chosen peak location range
    double peak_max = 0.8;
    double action_weight = 1.0; // kappa in |s-s'| + kappa*|v_a - v_a'|
};

// Continuous benchmark on [0,1]: actions are equally spaced displacements in
// [-0.25, 0.25], transitions clip to the interval, and the reward is a tent
// around a seeded peak. Ships l1 = slope*H and l2 = 1, both valid for the
// declared product metric.
Environment make_line_world(std::uint64_t seed, int n_actions, int horizon,
                            const LineWorldParams& params = {});

std::pair<Environment, HardInstanceSpec> make_hard_instance(std::uint64_t seed,
                                                            std::int64_t n_states,
                                                            int n_actions, int horizon);

std::pair<Environment, ClusterLinearSpec> make_cluster_linear(std::uint64_t seed, int d,
                                                              int states_per_cluster,
                                                              int n_actions, int horizon);

// State-action cloud over a uniform state grid crossed with every action;
// the sample fed to net/packing constructions for continuous environments.
std::vector<StateAction> grid_sample(const Environment& env, double mesh);

} // namespace ucrl
