#include "ucrl/approximators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ucrl {

double nn_evaluate(const KeyValueSet& kv, const Metric& metric, double lipschitz,
                   const StateAction& x, double cap) {
    double best = cap;
    for (const auto& p : kv) {
        double d = metric(x, p.x);
        if (std::isnan(d))
            throw ContractViolation("nn_evaluate: metric returned NaN");
        double cand = p.y + lipschitz * d;
        if (cand < best) best = cand;
    }
    return best;
}

double linear_evaluate(const KeyValueSet& kv, const FeatureMap& feature_map,
                       const StateAction& x, double cap, double span_tol) {
    return OptimisticQEvaluator::linear_span(kv, feature_map, cap, span_tol).evaluate(x);
}

namespace {

double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double norm2(const double* a, int n) { return std::sqrt(dot(a, a, n)); }

// coordinates of v in the orthonormal basis (rank rows of length dim),
// leaving the residual in v
void project_out(const std::vector<double>& basis, int rank, int dim,
                 std::vector<double>& v, std::vector<double>& coords) {
    coords.assign(static_cast<std::size_t>(rank), 0.0);
    for (int j = 0; j < rank; ++j) {
        const double* b = basis.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(dim);
        double c = dot(b, v.data(), dim);
        coords[static_cast<std::size_t>(j)] = c;
        for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] -= c * b[i];
    }
}

void cholesky_solve(std::vector<double>& m, std::vector<double>& rhs, int n) {
    // in-place LL^T factorization of the SPD matrix m (n x n, row-major)
    for (int j = 0; j < n; ++j) {
        double d = m[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            double l = m[static_cast<std::size_t>(j) * n + k];
            d -= l * l;
        }
        if (!(d > 0.0))
            throw std::logic_error("linear_span: normal equations not positive definite");
        d = std::sqrt(d);
        m[static_cast<std::size_t>(j) * n + j] = d;
        for (int i = j + 1; i < n; ++i) {
            double v = m[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                v -= m[static_cast<std::size_t>(i) * n + k] * m[static_cast<std::size_t>(j) * n + k];
            m[static_cast<std::size_t>(i) * n + j] = v / d;
        }
    }
    for (int i = 0; i < n; ++i) {
        double v = rhs[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) v -= m[static_cast<std::size_t>(i) * n + k] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = v / m[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double v = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) v -= m[static_cast<std::size_t>(k) * n + i] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = v / m[static_cast<std::size_t>(i) * n + i];
    }
}

} // namespace

OptimisticQEvaluator OptimisticQEvaluator::nearest_neighbor(const KeyValueSet& kv, Metric metric,
                                                            double lipschitz, double cap) {
    if (!(lipschitz >= 0.0))
        throw ContractViolation("nearest_neighbor evaluator: lipschitz must be >= 0");
    OptimisticQEvaluator e;
    e.kind_ = Kind::nearest_neighbor;
    e.cap_ = cap;
    e.lipschitz_ = lipschitz;
    e.metric_ = std::move(metric);
    e.size_ = kv.size();

    switch (e.metric_.form()) {
    case Metric::Form::discrete: {
        e.min_value_ = std::numeric_limits<double>::infinity();
        for (const auto& p : kv) {
            auto [it, inserted] = e.exact_.try_emplace(p.x, p.y);
            if (!inserted && p.y < it->second) it->second = p.y;
            if (p.y < e.min_value_) e.min_value_ = p.y;
        }
        break;
    }
    case Metric::Form::weighted_l1: {
        const auto& values = e.metric_.action_values();
        const int a_count = static_cast<int>(values.size());
        e.action_order_.resize(static_cast<std::size_t>(a_count));
        for (int a = 0; a < a_count; ++a) e.action_order_[static_cast<std::size_t>(a)] = a;
        std::sort(e.action_order_.begin(), e.action_order_.end(), [&values](int a, int b) {
            return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
        });
        e.action_step_.resize(a_count > 0 ? static_cast<std::size_t>(a_count - 1) : 0);
        for (int i = 0; i + 1 < a_count; ++i)
            e.action_step_[static_cast<std::size_t>(i)] =
                lipschitz *
                (e.metric_.action_weight() *
                 (values[static_cast<std::size_t>(e.action_order_[static_cast<std::size_t>(i + 1)])] -
                  values[static_cast<std::size_t>(e.action_order_[static_cast<std::size_t>(i)])]));
        if (!kv.empty()) {
            e.state_dim_ = static_cast<int>(state_coords(kv.front().x.state).size());
            e.key_coords_.reserve(kv.size() * static_cast<std::size_t>(e.state_dim_));
            e.key_actions_.reserve(kv.size());
            e.key_values_.reserve(kv.size());
            for (const auto& p : kv) {
                const auto& c = state_coords(p.x.state);
                if (static_cast<int>(c.size()) != e.state_dim_)
                    throw ContractViolation("nearest_neighbor evaluator: mixed state dimensions");
                e.key_coords_.insert(e.key_coords_.end(), c.begin(), c.end());
                e.key_actions_.push_back(p.x.action);
                e.key_values_.push_back(p.y);
            }
        }
        break;
    }
    case Metric::Form::custom:
        e.kv_ = kv;
        break;
    }
    return e;
}

OptimisticQEvaluator OptimisticQEvaluator::tabular(const KeyValueSet& kv, double default_value) {
    OptimisticQEvaluator e;
    e.kind_ = Kind::tabular;
    e.cap_ = default_value;
    e.size_ = kv.size();
    for (const auto& p : kv) {
        auto [it, inserted] = e.exact_.try_emplace(p.x, p.y);
        if (!inserted && p.y < it->second) it->second = p.y;
    }
    return e;
}

OptimisticQEvaluator OptimisticQEvaluator::linear_span(const KeyValueSet& kv,
                                                       FeatureMap feature_map, double cap,
                                                       double span_tol) {
    if (feature_map.dim < 1)
        throw ContractViolation("linear_span evaluator: feature dimension must be >= 1");
    OptimisticQEvaluator e;
    e.kind_ = Kind::linear_span;
    e.cap_ = cap;
    e.span_tol_ = span_tol;
    e.feature_map_ = std::move(feature_map);
    e.size_ = kv.size();
    const int dim = e.feature_map_.dim;

    std::vector<double> phi, coords;
    // grow an orthonormal basis of the observed feature span
    for (const auto& p : kv) {
        phi = e.feature_map_.fn(p.x.state, p.x.action);
        if (static_cast<int>(phi.size()) != dim)
            throw ContractViolation("linear_span evaluator: feature size mismatch");
        double pn = norm2(phi.data(), dim);
        if (pn <= span_tol && p.y > span_tol) e.degenerate_warning_ = true;
        project_out(e.basis_, e.rank_, dim, phi, coords);
        project_out(e.basis_, e.rank_, dim, phi, coords); // reorthogonalize
        double rn = norm2(phi.data(), dim);
        if (rn > span_tol * (1.0 + pn)) {
            for (int i = 0; i < dim; ++i) phi[static_cast<std::size_t>(i)] /= rn;
            e.basis_.insert(e.basis_.end(), phi.begin(), phi.end());
            ++e.rank_;
        }
    }
    if (e.rank_ == 0) return e;

    // least squares in basis coordinates; the solution is the minimum-norm one
    std::vector<double> gram(static_cast<std::size_t>(e.rank_) * static_cast<std::size_t>(e.rank_), 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(e.rank_), 0.0);
    for (const auto& p : kv) {
        phi = e.feature_map_.fn(p.x.state, p.x.action);
        coords.assign(static_cast<std::size_t>(e.rank_), 0.0);
        for (int j = 0; j < e.rank_; ++j)
            coords[static_cast<std::size_t>(j)] =
                dot(e.basis_.data() + static_cast<std::size_t>(j) * dim, phi.data(), dim);
        for (int i = 0; i < e.rank_; ++i) {
            rhs[static_cast<std::size_t>(i)] += p.y * coords[static_cast<std::size_t>(i)];
            for (int j = 0; j < e.rank_; ++j)
                gram[static_cast<std::size_t>(i) * e.rank_ + j] +=
                    coords[static_cast<std::size_t>(i)] * coords[static_cast<std::size_t>(j)];
        }
    }
    cholesky_solve(gram, rhs, e.rank_);
    e.fit_ = std::move(rhs);
    return e;
}

double OptimisticQEvaluator::evaluate(const State& s, int action) const {
    switch (kind_) {
    case Kind::tabular: {
        auto it = exact_.find(StateAction{s, action});
        return it == exact_.end() ? cap_ : it->second;
    }
    case Kind::linear_span: {
        std::vector<double> phi = feature_map_.fn(s, action);
        const int dim = feature_map_.dim;
        double pn = norm2(phi.data(), dim);
        std::vector<double> coords;
        project_out(basis_, rank_, dim, phi, coords);
        double rn = norm2(phi.data(), dim);
        if (rn > span_tol_ * (1.0 + pn)) return cap_;
        double v = 0.0;
        for (int j = 0; j < rank_; ++j) v += coords[static_cast<std::size_t>(j)] * fit_[static_cast<std::size_t>(j)];
        return v;
    }
    case Kind::nearest_neighbor:
        break;
    }

    if (size_ == 0) return cap_;
    switch (metric_.form()) {
    case Metric::Form::discrete: {
        double best = cap_;
        double unseen = min_value_ + lipschitz_ * metric_.distinct_distance();
        auto it = exact_.find(StateAction{s, action});
        if (it != exact_.end() && it->second < best) best = it->second;
        if (unseen < best) best = unseen;
        return best;
    }
    case Metric::Form::weighted_l1: {
        thread_local std::vector<double> envelope;
        state_envelope(s, envelope);
        double v = envelope[static_cast<std::size_t>(action)];
        return v < cap_ ? v : cap_;
    }
    case Metric::Form::custom:
        return nn_evaluate(kv_, metric_, lipschitz_, StateAction{s, action}, cap_);
    }
    throw ContractViolation("evaluate: unknown metric form");
}

// envelope[a] = min_i { y_i + lipschitz * (|s - s_i| + kappa*|v_a - v_{a_i}|) },
// uncapped. One scan over the keys collects per-action-group minima of the
// state part; a min-plus sweep along the sorted action axis then spreads them
// with the action costs (consecutive gaps telescope to the full |v_a - v_b|).
// This keeps a query linear in the buffer instead of buffer x actions and
// matches the direct formula up to rounding.
void OptimisticQEvaluator::state_envelope(const State& s, std::vector<double>& envelope) const {
    const auto& c = state_coords(s);
    if (static_cast<int>(c.size()) != state_dim_ && !key_values_.empty())
        throw ContractViolation("evaluate: state dimension mismatch");
    for (double x : c)
        if (std::isnan(x)) throw ContractViolation("evaluate: NaN state coordinate");
    const std::size_t a_count = metric_.action_values().size();
    envelope.assign(a_count, std::numeric_limits<double>::infinity());
    const std::size_t n = key_values_.size();
    if (state_dim_ == 1) {
        const double q0 = c[0];
        for (std::size_t i = 0; i < n; ++i) {
            double cand = key_values_[i] + lipschitz_ * std::fabs(q0 - key_coords_[i]);
            double& slot = envelope[static_cast<std::size_t>(key_actions_[i])];
            if (cand < slot) slot = cand;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            const double* kc = key_coords_.data() + i * static_cast<std::size_t>(state_dim_);
            for (int k = 0; k < state_dim_; ++k)
                d += std::fabs(c[static_cast<std::size_t>(k)] - kc[k]);
            double cand = key_values_[i] + lipschitz_ * d;
            double& slot = envelope[static_cast<std::size_t>(key_actions_[i])];
            if (cand < slot) slot = cand;
        }
    }
    for (std::size_t i = 1; i < a_count; ++i) {
        double reach = envelope[static_cast<std::size_t>(action_order_[i - 1])] + action_step_[i - 1];
        double& slot = envelope[static_cast<std::size_t>(action_order_[i])];
        if (reach < slot) slot = reach;
    }
    for (std::size_t i = a_count; i-- > 1;) {
        double reach = envelope[static_cast<std::size_t>(action_order_[i])] + action_step_[i - 1];
        double& slot = envelope[static_cast<std::size_t>(action_order_[i - 1])];
        if (reach < slot) slot = reach;
    }
}

void OptimisticQEvaluator::evaluate_all(const State& s, int num_actions,
                                        std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(num_actions), cap_);
    if (kind_ == Kind::nearest_neighbor && metric_.form() == Metric::Form::weighted_l1 &&
        size_ > 0) {
        thread_local std::vector<double> envelope;
        state_envelope(s, envelope);
        for (int a = 0; a < num_actions; ++a) {
            double v = envelope[static_cast<std::size_t>(a)];
            out[static_cast<std::size_t>(a)] = v < cap_ ? v : cap_;
        }
        return;
    }
    for (int a = 0; a < num_actions; ++a) out[static_cast<std::size_t>(a)] = evaluate(s, a);
}

double OptimisticQEvaluator::max_over_actions(const State& s, int num_actions) const {
    std::vector<double> vals;
    evaluate_all(s, num_actions, vals);
    double best = vals.at(0);
    for (int a = 1; a < num_actions; ++a)
        if (vals[static_cast<std::size_t>(a)] > best) best = vals[static_cast<std::size_t>(a)];
    return best;
}

int OptimisticQEvaluator::argmax_action(const State& s, int num_actions) const {
    std::vector<double> vals;
    evaluate_all(s, num_actions, vals);
    int best = 0;
    for (int a = 1; a < num_actions; ++a)
        if (vals[static_cast<std::size_t>(a)] > vals[static_cast<std::size_t>(best)]) best = a;
    return best;
}

PropertyReport check_oracle_properties(const OptimisticQEvaluator& evaluator,
                                       const KeyValueSet& kv, const Metric& metric,
                                       double lipschitz, const KeyValueSet& sample_points,
                                       double tol, double delta) {
    PropertyReport report;
    report.points_checked = sample_points.size();

    std::vector<double> qhat(sample_points.size());
    for (std::size_t i = 0; i < sample_points.size(); ++i)
        qhat[i] = evaluator.evaluate(sample_points[i].x);

    for (std::size_t i = 0; i < sample_points.size(); ++i) {
        for (std::size_t j = i + 1; j < sample_points.size(); ++j) {
            double excess = std::fabs(qhat[i] - qhat[j]) -
                            lipschitz * metric(sample_points[i].x, sample_points[j].x);
            if (excess > report.worst_lipschitz_excess) report.worst_lipschitz_excess = excess;
            ++report.pairs_checked;
        }
        double gap = sample_points[i].y - qhat[i];
        if (gap > report.worst_dominance_gap) report.worst_dominance_gap = gap;
    }
    for (const auto& p : kv) {
        double err = std::fabs(evaluator.evaluate(p.x) - p.y);
        if (err > report.worst_interpolation_error) report.worst_interpolation_error = err;
    }

    report.lipschitz_ok = report.worst_lipschitz_excess <= tol;
    report.dominance_ok = report.worst_dominance_gap <= tol;
    report.interpolation_ok = report.worst_interpolation_error <= delta + tol;
    return report;
}

} // namespace ucrl
