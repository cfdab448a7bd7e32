#include "ucrl/mdp.hpp"

#include <cmath>
#include <cstring>

namespace ucrl {

bool states_equal(const State& a, const State& b) {
    if (a.index() != b.index()) return false;
    if (std::holds_alternative<std::int64_t>(a))
        return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    return std::get<std::vector<double>>(a) == std::get<std::vector<double>>(b);
}

std::int64_t state_index(const State& s) {
    if (!std::holds_alternative<std::int64_t>(s))
        throw ContractViolation("state_index: state is not a finite index");
    return std::get<std::int64_t>(s);
}

const std::vector<double>& state_coords(const State& s) {
    if (!std::holds_alternative<std::vector<double>>(s))
        throw ContractViolation("state_coords: state is not a real vector");
    return std::get<std::vector<double>>(s);
}

namespace {

inline std::size_t mix(std::size_t h, std::uint64_t v) {
    // splitmix64 step folded into the running hash
    v += 0x9e3779b97f4a7c15ULL + h;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<std::size_t>(v ^ (v >> 31));
}

} // namespace

std::size_t state_hash(const State& s) {
    if (std::holds_alternative<std::int64_t>(s))
        return mix(0x1, static_cast<std::uint64_t>(std::get<std::int64_t>(s)));
    std::size_t h = 0x2;
    for (double d : std::get<std::vector<double>>(s)) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof bits);
        h = mix(h, bits);
    }
    return h;
}

Metric Metric::discrete(double distinct_distance) {
    Metric m;
    m.form_ = Form::discrete;
    m.d0_ = distinct_distance;
    return m;
}

Metric Metric::weighted_l1(std::vector<double> action_values, double action_weight) {
    Metric m;
    m.form_ = Form::weighted_l1;
    m.kappa_ = action_weight;
    m.action_values_ = std::move(action_values);
    return m;
}

Metric Metric::custom(std::function<double(const StateAction&, const StateAction&)> fn) {
    Metric m;
    m.form_ = Form::custom;
    m.fn_ = std::move(fn);
    return m;
}

double Metric::operator()(const StateAction& x, const StateAction& y) const {
    switch (form_) {
    case Form::discrete:
        return (x.action == y.action && states_equal(x.state, y.state)) ? 0.0 : d0_;
    case Form::weighted_l1: {
        const auto& a = state_coords(x.state);
        const auto& b = state_coords(y.state);
        if (a.size() != b.size())
            throw ContractViolation("weighted_l1 metric: dimension mismatch");
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
        return d + kappa_ * std::fabs(action_values_.at(static_cast<std::size_t>(x.action)) -
                                      action_values_.at(static_cast<std::size_t>(y.action)));
    }
    case Form::custom:
        return fn_(x, y);
    }
    throw ContractViolation("metric: unknown form");
}

std::pair<State, double> step(const Environment& env, const State& s, int action) {
    if (action < 0 || action >= env.num_actions)
        throw ContractViolation("step: action index " + std::to_string(action) +
                                " outside [0, " + std::to_string(env.num_actions) + ")");
    double r = env.reward(s, action);
    if (!(r >= 0.0 && r <= 1.0))
        throw EnvironmentIntegrityError("step: reward " + std::to_string(r) +
                                        " outside [0,1]");
    return {env.transition(s, action), r};
}

void ExperienceBuffer::append_episode(const std::vector<TransitionRecord>& trajectory,
                                      int horizon) {
    if (static_cast<int>(trajectory.size()) != horizon)
        throw ContractViolation("append_episode: trajectory has " +
                                std::to_string(trajectory.size()) + " records, expected " +
                                std::to_string(horizon));
    for (int h = 0; h < horizon; ++h) {
        if (trajectory[static_cast<std::size_t>(h)].stage != h + 1)
            throw ContractViolation("append_episode: stage indices must run 1..H in order");
    }
    records_.insert(records_.end(), trajectory.begin(), trajectory.end());
}

double nearest_gap(const ExperienceBuffer& buffer, const StateAction& x, const Metric& metric) {
    if (buffer.empty()) return infinite_gap();
    double best = infinite_gap();
    for (const auto& rec : buffer.records()) {
        double d = metric(x, StateAction{rec.state, rec.action});
        if (d < best) best = d;
    }
    return best;
}

double episode_regret(double v_star_initial, const std::vector<double>& trajectory_rewards) {
    double total = 0.0;
    for (auto it = trajectory_rewards.rbegin(); it != trajectory_rewards.rend(); ++it)
        total = *it + total;
    return v_star_initial - total;
}

void RegretLedger::add(int episode, double episode_reward, double instant_regret,
                       std::int64_t buffer_size, double recompute_ms) {
    RegretRow row;
    row.episode = episode;
    row.episode_reward = episode_reward;
    row.instant_regret = instant_regret;
    row.cumulative_regret = cumulative() + instant_regret;
    row.buffer_size = buffer_size;
    row.recompute_ms = recompute_ms;
    rows.push_back(row);
}

} // namespace ucrl
