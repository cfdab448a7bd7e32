#include "ucrl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ucrl/rng.hpp"

namespace ucrl {

namespace {

double round3(double x) { return std::floor(x * 1000.0 + 0.5) / 1000.0; }

int ceil_log2(std::int64_t n) {
    int t = 0;
    std::int64_t p = 1;
    while (p < n) {
        p *= 2;
        ++t;
    }
    return t;
}

} // namespace

Environment make_finite_random(std::uint64_t seed, std::int64_t n_states, int n_actions,
                               int horizon) {
    if (n_states < 1 || n_actions < 1 || horizon < 1)
        throw ContractViolation("make_finite_random: S, A, H must all be >= 1");
    Rng rng(seed);
    auto next = std::make_shared<std::vector<std::int64_t>>();
    auto rew = std::make_shared<std::vector<double>>();
    next->resize(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions));
    rew->resize(next->size());
    for (std::size_t i = 0; i < next->size(); ++i) {
        (*next)[i] = static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(n_states)));
        (*rew)[i] = round3(rng.uniform());
    }

    Environment env;
    env.family = "finite_random";
    env.num_actions = n_actions;
    env.horizon = horizon;
    env.num_states = n_states;
    env.initial_state = finite_state(0);
    env.action_values.resize(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a) env.action_values[static_cast<std::size_t>(a)] = a;
    const auto A = static_cast<std::size_t>(n_actions);
    env.transition = [next, A](const State& s, int a) {
        return finite_state((*next)[static_cast<std::size_t>(state_index(s)) * A +
                                    static_cast<std::size_t>(a)]);
    };
    env.reward = [rew, A](const State& s, int a) {
        return (*rew)[static_cast<std::size_t>(state_index(s)) * A + static_cast<std::size_t>(a)];
    };
    env.metric = Metric::discrete(static_cast<double>(horizon));
    env.lipschitz = LipschitzConstants{1.0, 1.0};
    return env;
}

Environment make_line_world(std::uint64_t seed, int n_actions, int horizon,
                            const LineWorldParams& params) {
    if (n_actions < 2)
        throw ContractViolation("make_line_world: need at least 2 actions");
    if (horizon < 1) throw ContractViolation("make_line_world: horizon must be >= 1");
    Rng rng(seed);
    const double peak = rng.uniform(params.peak_min, params.peak_max);
    const double slope = params.slope;

    std::vector<double> values(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a)
        values[static_cast<std::size_t>(a)] =
            -0.25 + 0.5 * static_cast<double>(a) / static_cast<double>(n_actions - 1);

    Environment env;
    env.family = "line_world";
    env.num_actions = n_actions;
    env.horizon = horizon;
    env.initial_state = real_state(0.0);
    env.action_values = values;
    env.state_low = 0.0;
    env.state_high = 1.0;
    env.transition = [values](const State& s, int a) {
        double x = state_coords(s).at(0) + values[static_cast<std::size_t>(a)];
        return real_state(std::clamp(x, 0.0, 1.0));
    };
    env.reward = [peak, slope](const State& s, int) {
        double r = 1.0 - slope * std::fabs(state_coords(s).at(0) - peak);
        return r > 0.0 ? r : 0.0;
    };
    env.metric = Metric::weighted_l1(values, params.action_weight);
    // The tent makes V*_h Lipschitz with constant slope*(H-h+1) in the state,
    // and the clipped shift is 1-Lipschitz, so these hold for every stage.
    env.lipschitz = LipschitzConstants{slope * static_cast<double>(horizon), 1.0};
    env.diameter = 1.0 + params.action_weight * (values.back() - values.front());
    return env;
}

std::pair<Environment, HardInstanceSpec> make_hard_instance(std::uint64_t seed,
                                                            std::int64_t n_states,
                                                            int n_actions, int horizon) {
    if (n_states < 4)
        throw ContractViolation("make_hard_instance: need at least 4 states");
    if (n_actions < 1) throw ContractViolation("make_hard_instance: need at least 1 action");
    if (horizon < ceil_log2(n_states))
        throw ContractViolation("make_hard_instance: horizon must be >= ceil(log2(S))");

    const std::int64_t n_tree = n_states - 2;
    const std::int64_t leaf_start = n_tree / 2;        // heap order: leaves are the tail
    const std::int64_t leaf_count = n_tree - leaf_start;
    const std::int64_t s_null = n_tree;
    const std::int64_t s_reward = n_tree + 1;

    Rng rng(seed);
    const std::int64_t star_leaf =
        leaf_start + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(leaf_count)));
    const int star_action = static_cast<int>(rng.index(static_cast<std::size_t>(n_actions)));

    HardInstanceSpec spec;
    spec.n_states = n_states;
    spec.n_actions = n_actions;
    spec.horizon = horizon;
    spec.tree_depth = ceil_log2(n_tree);
    spec.leaf_count = leaf_count;
    spec.star_leaf = star_leaf;
    spec.star_action = star_action;
    spec.absorbing_reward_state = s_reward;
    spec.absorbing_null_state = s_null;
    spec.seed = seed;
    {
        int depth = 0;
        for (std::int64_t i = star_leaf; i > 0; i = (i - 1) / 2) ++depth;
        spec.star_depth = depth + 1;
    }

    Environment env;
    env.family = "hard_instance";
    env.num_actions = n_actions;
    env.horizon = horizon;
    env.num_states = n_states;
    env.initial_state = finite_state(0);
    env.action_values.resize(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a) env.action_values[static_cast<std::size_t>(a)] = a;
    env.transition = [n_tree, leaf_start, s_null, s_reward, star_leaf, star_action](
                         const State& s, int a) {
        std::int64_t i = state_index(s);
        if (i == s_null || i == s_reward) return finite_state(i); // absorbing
        if (i < leaf_start) {
            // interior: action 0 goes left, everything else goes right
            std::int64_t child = (a == 0) ? 2 * i + 1 : 2 * i + 2;
            if (child >= n_tree) child = 2 * i + 1;
            return finite_state(child);
        }
        return finite_state(i == star_leaf && a == star_action ? s_reward : s_null);
    };
    env.reward = [s_reward](const State& s, int) {
        return state_index(s) == s_reward ? 1.0 : 0.0;
    };
    env.metric = Metric::discrete(static_cast<double>(horizon));
    env.lipschitz = LipschitzConstants{1.0, 1.0};
    return {std::move(env), spec};
}

std::pair<Environment, ClusterLinearSpec> make_cluster_linear(std::uint64_t seed, int d,
                                                              int states_per_cluster,
                                                              int n_actions, int horizon) {
    if (d < 1) throw ContractViolation("make_cluster_linear: d must be >= 1");
    if (states_per_cluster < 1 || n_actions < 1 || horizon < 1)
        throw ContractViolation("make_cluster_linear: sizes must be >= 1");

    Rng rng(seed);
    const int n_classes = (d + n_actions - 1) / n_actions; // state classes
    const int m = states_per_cluster;
    const std::int64_t n_states = static_cast<std::int64_t>(n_classes) * m;

    // Assign each (state class, action) cell a cluster id, covering all d.
    std::vector<int> cells(static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(n_actions));
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    for (std::size_t i = cells.size(); i > 1; --i)
        std::swap(cells[i - 1], cells[rng.index(i)]);
    std::vector<int> cell_cluster(cells.size(), 0);
    for (std::size_t i = 0; i < cells.size(); ++i)
        cell_cluster[static_cast<std::size_t>(cells[i])] =
            i < static_cast<std::size_t>(d) ? static_cast<int>(i)
                                            : static_cast<int>(rng.index(static_cast<std::size_t>(d)));

    std::vector<int> cluster_class(static_cast<std::size_t>(d));  // cluster -> next state class
    for (int c = 0; c < d; ++c)
        cluster_class[static_cast<std::size_t>(c)] =
            static_cast<int>(rng.index(static_cast<std::size_t>(n_classes)));
    std::vector<double> cluster_reward(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) cluster_reward[static_cast<std::size_t>(c)] = round3(rng.uniform());

    // Which member of the target class each pair lands on is free; randomize it.
    auto member = std::make_shared<std::vector<int>>(
        static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions));
    for (auto& v : *member) v = static_cast<int>(rng.index(static_cast<std::size_t>(m)));

    auto g = std::make_shared<std::vector<int>>(cell_cluster);
    auto t = std::make_shared<std::vector<int>>(cluster_class);
    auto r = std::make_shared<std::vector<double>>(cluster_reward);

    ClusterLinearSpec spec;
    spec.d = d;
    spec.states_per_cluster = m;
    spec.n_state_classes = n_classes;
    spec.cluster_reward = cluster_reward;
    spec.pair_cluster.assign(static_cast<std::size_t>(n_states),
                             std::vector<int>(static_cast<std::size_t>(n_actions)));
    for (std::int64_t s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a)
            spec.pair_cluster[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] =
                cell_cluster[static_cast<std::size_t>(s / m) * n_actions + static_cast<std::size_t>(a)];
    spec.next_cluster.assign(static_cast<std::size_t>(d),
                             std::vector<int>(static_cast<std::size_t>(n_actions)));
    for (int c = 0; c < d; ++c)
        for (int a = 0; a < n_actions; ++a)
            spec.next_cluster[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)] =
                cell_cluster[static_cast<std::size_t>(cluster_class[static_cast<std::size_t>(c)]) *
                                 n_actions +
                             static_cast<std::size_t>(a)];

    Environment env;
    env.family = "cluster_linear";
    env.num_actions = n_actions;
    env.horizon = horizon;
    env.num_states = n_states;
    env.initial_state = finite_state(0);
    env.action_values.resize(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a) env.action_values[static_cast<std::size_t>(a)] = a;
    const auto A = static_cast<std::size_t>(n_actions);
    env.transition = [g, t, member, m, A](const State& s, int a) {
        std::int64_t si = state_index(s);
        int cluster = (*g)[static_cast<std::size_t>(si / m) * A + static_cast<std::size_t>(a)];
        int klass = (*t)[static_cast<std::size_t>(cluster)];
        int j = (*member)[static_cast<std::size_t>(si) * A + static_cast<std::size_t>(a)];
        return finite_state(static_cast<std::int64_t>(klass) * m + j);
    };
    env.reward = [g, r, m, A](const State& s, int a) {
        int cluster = (*g)[static_cast<std::size_t>(state_index(s) / m) * A + static_cast<std::size_t>(a)];
        return (*r)[static_cast<std::size_t>(cluster)];
    };
    env.metric = Metric::discrete(static_cast<double>(horizon));
    env.lipschitz = LipschitzConstants{1.0, 1.0};
    env.feature_dim = d;
    env.feature_map = [g, m, A, d](const State& s, int a) {
        std::vector<double> phi(static_cast<std::size_t>(d), 0.0);
        int cluster = (*g)[static_cast<std::size_t>(state_index(s) / m) * A + static_cast<std::size_t>(a)];
        phi[static_cast<std::size_t>(cluster)] = 1.0;
        return phi;
    };
    return {std::move(env), spec};
}

std::vector<StateAction> grid_sample(const Environment& env, double mesh) {
    if (!env.state_low || !env.state_high)
        throw ContractViolation("grid_sample: environment does not declare state bounds");
    if (!(mesh > 0.0)) throw ContractViolation("grid_sample: mesh must be positive");
    const double low = *env.state_low;
    const double high = *env.state_high;
    const std::int64_t n = static_cast<std::int64_t>(std::floor((high - low) / mesh + 0.5)) + 1;
    std::vector<StateAction> sample;
    sample.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(env.num_actions));
    for (std::int64_t i = 0; i < n; ++i) {
        State s = real_state(low + static_cast<double>(i) * mesh);
        for (int a = 0; a < env.num_actions; ++a) sample.push_back(StateAction{s, a});
    }
    return sample;
}

} // namespace ucrl
