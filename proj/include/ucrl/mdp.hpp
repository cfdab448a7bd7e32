#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ucrl {

// Caller broke an interface precondition (bad action index, malformed
// trajectory, invalid configuration value, ...).
struct ContractViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Environment returned something outside its declared contract, e.g. a reward
// outside [0,1]. Surfaced as a hard error instead of clamping.
struct EnvironmentIntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A supposedly deterministic environment contradicted an earlier observation
// for the same (state, action).
struct DeterminismViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// States are either finite indices or points in R^n. Actions are always
// indices into the environment's finite ordered action list; any action
// payload (e.g. a displacement) lives in Environment::action_values.
using State = std::variant<std::int64_t, std::vector<double>>;

inline State finite_state(std::int64_t index) { return State(index); }
inline State real_state(double x) { return State(std::vector<double>{x}); }

bool states_equal(const State& a, const State& b);
std::int64_t state_index(const State& s);              // throws if not finite
const std::vector<double>& state_coords(const State& s); // throws if not real

// Exact hash on the state's representation (bit patterns for real vectors;
// fine for deterministic environments where equal states are bitwise equal).
std::size_t state_hash(const State& s);

struct StateAction {
    State state;
    int action = 0;
};

inline bool operator==(const StateAction& a, const StateAction& b) {
    return a.action == b.action && states_equal(a.state, b.state);
}

// Continuity constants of the environment. The combined constant is always
// (l2 + 1) * l1, computed rather than stored so the identity holds exactly.
struct LipschitzConstants {
    double l1 = 0.0;
    double l2 = 0.0;
    double combined() const { return (l2 + 1.0) * l1; }
};

// Pseudometric over state-action pairs. Two structured forms are recognized
// so the hot evaluation loops can run without an indirect call per pair:
//   discrete     dist(x, y) = 0 if x == y else distinct_distance
//   weighted_l1  dist((s,a),(s',a')) = sum_i |s_i - s'_i| + kappa * |v_a - v_a'|
// Anything else goes through a user-supplied callable.
class Metric {
public:
    enum class Form { discrete, weighted_l1, custom };

    static Metric discrete(double distinct_distance);
    static Metric weighted_l1(std::vector<double> action_values, double action_weight);
    static Metric custom(std::function<double(const StateAction&, const StateAction&)> fn);

    double operator()(const StateAction& x, const StateAction& y) const;

    Form form() const { return form_; }
    double distinct_distance() const { return d0_; }
    double action_weight() const { return kappa_; }
    const std::vector<double>& action_values() const { return action_values_; }

private:
    Metric() = default;
    Form form_ = Form::custom;
    double d0_ = 0.0;
    double kappa_ = 1.0;
    std::vector<double> action_values_;
    std::function<double(const StateAction&, const StateAction&)> fn_;
};

// A deterministic finite-horizon decision process plus the metric structure
// agents rely on. Immutable once built; generators return it by value.
struct Environment {
    std::string family;
    int num_actions = 0;
    int horizon = 0;
    State initial_state;
    std::vector<double> action_values;   // payload per action index
    std::function<State(const State&, int)> transition;
    std::function<double(const State&, int)> reward;
    Metric metric = Metric::discrete(0.0);
    std::optional<LipschitzConstants> lipschitz;

    std::optional<std::int64_t> num_states; // finite case: states are 0..num_states-1
    std::optional<double> diameter;         // of the state-action space, when known
    std::optional<double> state_low;        // 1-d continuous case: state bounds
    std::optional<double> state_high;

    // Linear-feature environments expose their feature map for the span oracle.
    int feature_dim = 0;
    std::function<std::vector<double>(const State&, int)> feature_map;

    bool finite() const { return num_states.has_value(); }
};

// Queries the environment once. Validates the action index and the reward
// range; never mutates anything.
std::pair<State, double> step(const Environment& env, const State& s, int action);

struct TransitionRecord {
    State state;
    int action = 0;
    State next_state;
    double reward = 0.0;
    int episode = 0;
    int stage = 0;   // 1-based, in [1, H]
};

// Append-only set of observed transitions, grown by one full trajectory per
// episode. Single-writer; readers see a stable snapshot between episodes.
class ExperienceBuffer {
public:
    // trajectory must hold exactly `horizon` records with stages 1..horizon.
    void append_episode(const std::vector<TransitionRecord>& trajectory, int horizon);

    const std::vector<TransitionRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

private:
    std::vector<TransitionRecord> records_;
};

// Distance from x to its nearest recorded pair; +infinity on an empty buffer
// (callers treat that as "nothing known", forcing the capped estimate).
double nearest_gap(const ExperienceBuffer& buffer, const StateAction& x, const Metric& metric);

inline double infinite_gap() { return std::numeric_limits<double>::infinity(); }

// v_star_initial minus the sum of collected rewards (summed back to front so
// the association matches the DP recursion that produced v_star_initial).
double episode_regret(double v_star_initial, const std::vector<double>& trajectory_rewards);

struct RegretRow {
    int episode = 0;
    double episode_reward = 0.0;
    double instant_regret = 0.0;
    double cumulative_regret = 0.0;
    std::int64_t buffer_size = 0;
    double recompute_ms = 0.0;
};

struct RegretLedger {
    std::vector<RegretRow> rows;

    void add(int episode, double episode_reward, double instant_regret,
             std::int64_t buffer_size, double recompute_ms);
    double cumulative() const { return rows.empty() ? 0.0 : rows.back().cumulative_regret; }
};

} // namespace ucrl
