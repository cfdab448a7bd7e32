#pragma once

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "ucrl/mdp.hpp"

namespace ucrl {

struct KeyValue {
    StateAction x;
    double y = 0.0;
};
using KeyValueSet = std::vector<KeyValue>;

struct FeatureMap {
    int dim = 0;
    std::function<std::vector<double>(const State&, int)> fn;
};

// Nearest-neighbor upper envelope:
//   min( cap, min_i { y_i + lipschitz * dist(x, x_i) } ),
// and cap when kv is empty. The envelope is lipschitz-Lipschitz, dominates
// any lipschitz-Lipschitz function passing through the data, and
// interpolates the data exactly under a pseudometric.
double nn_evaluate(const KeyValueSet& kv, const Metric& metric, double lipschitz,
                   const StateAction& x, double cap);

// Span-restricted least squares: if feature(x) lies in the span of the
// observed features (projection residual <= span_tol * (1 + |feature(x)|)),
// returns the minimum-norm least-squares fit at x; otherwise returns cap.
double linear_evaluate(const KeyValueSet& kv, const FeatureMap& feature_map,
                       const StateAction& x, double cap, double span_tol = 1e-8);

// Immutable per-stage value estimate built from key-value data. Construction
// picks an internal layout matched to the metric form so evaluation stays a
// tight loop; results are identical to the plain formulas above.
class OptimisticQEvaluator {
public:
    enum class Kind { nearest_neighbor, linear_span, tabular };

    static OptimisticQEvaluator nearest_neighbor(const KeyValueSet& kv, Metric metric,
                                                 double lipschitz, double cap);
    static OptimisticQEvaluator linear_span(const KeyValueSet& kv, FeatureMap feature_map,
                                            double cap, double span_tol = 1e-8);
    static OptimisticQEvaluator tabular(const KeyValueSet& kv, double default_value);

    double evaluate(const StateAction& x) const { return evaluate(x.state, x.action); }
    double evaluate(const State& s, int action) const;

    // max / lowest-index argmax of evaluate(s, a) over a in [0, num_actions);
    // same values as repeated evaluate calls.
    double max_over_actions(const State& s, int num_actions) const;
    int argmax_action(const State& s, int num_actions) const;

    Kind kind() const { return kind_; }
    double cap() const { return cap_; }
    std::size_t size() const { return size_; }
    // Set when a linear build saw an all-zero feature paired with a positive
    // value; the fit cannot represent that pair.
    bool degenerate_feature_warning() const { return degenerate_warning_; }

private:
    OptimisticQEvaluator() = default;

    void evaluate_all(const State& s, int num_actions, std::vector<double>& out) const;
    void state_envelope(const State& s, std::vector<double>& group_min) const;

    Kind kind_ = Kind::tabular;
    double cap_ = 0.0;
    double lipschitz_ = 0.0;
    std::size_t size_ = 0;
    Metric metric_ = Metric::discrete(0.0);

    // nearest_neighbor, generic metric
    KeyValueSet kv_;

    // nearest_neighbor, weighted_l1 metric: struct-of-arrays key layout plus
    // the sorted action axis for the min-plus transform
    int state_dim_ = 0;
    std::vector<double> key_coords_;   // size * state_dim_
    std::vector<int> key_actions_;
    std::vector<double> key_values_;
    std::vector<int> action_order_;    // action indices sorted by value
    std::vector<double> action_step_;  // lipschitz * kappa * consecutive value gaps

    // nearest_neighbor, discrete metric / tabular: exact-match index
    struct SAHash {
        std::size_t operator()(const StateAction& x) const {
            return state_hash(x.state) * 1000003u + static_cast<std::size_t>(x.action);
        }
    };
    std::unordered_map<StateAction, double, SAHash> exact_;
    double min_value_ = 0.0;

    // linear_span
    FeatureMap feature_map_;
    double span_tol_ = 1e-8;
    int rank_ = 0;
    std::vector<double> basis_;        // rank_ x dim, row-major, orthonormal
    std::vector<double> fit_;          // rank_ coefficients in basis coordinates
    bool degenerate_warning_ = false;
};

// Outcome of probing an evaluator against the three oracle conditions:
// (1) Lipschitz continuity over sampled pairs, (2) dominance of the true
// values at sampled points, (3) interpolation at the keys within delta.
// sample_points carry ground-truth values of the target function.
struct PropertyReport {
    bool lipschitz_ok = true;
    bool dominance_ok = true;
    bool interpolation_ok = true;
    double worst_lipschitz_excess = 0.0;   // max |q̂(x)-q̂(x')| - L*dist(x,x')
    double worst_dominance_gap = 0.0;      // max q(x) - q̂(x)
    double worst_interpolation_error = 0.0;
    std::size_t pairs_checked = 0;
    std::size_t points_checked = 0;

    bool all_ok() const { return lipschitz_ok && dominance_ok && interpolation_ok; }
};

PropertyReport check_oracle_properties(const OptimisticQEvaluator& evaluator,
                                       const KeyValueSet& kv, const Metric& metric,
                                       double lipschitz, const KeyValueSet& sample_points,
                                       double tol, double delta = 0.0);

} // namespace ucrl
