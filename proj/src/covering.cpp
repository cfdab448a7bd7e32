#include "ucrl/covering.hpp"

#include <cmath>
#include <stdexcept>

namespace ucrl {

namespace {

std::vector<std::size_t> greedy_scan(const MetricSample& sample, double eps) {
    std::vector<std::size_t> centers;
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
        bool keep = true;
        for (std::size_t c : centers) {
            if (sample.metric(sample.points[i], sample.points[c]) <= eps) {
                keep = false;
                break;
            }
        }
        if (keep) centers.push_back(i);
    }
    return centers;
}

} // namespace

CoverResult greedy_net(const MetricSample& sample, double eps) {
    if (!(eps > 0.0)) throw ContractViolation("greedy_net: eps must be positive");
    CoverResult result;
    result.kind = CoverResult::Kind::net;
    result.epsilon = eps;
    result.center_indices = greedy_scan(sample, eps);
    result.size = result.center_indices.size();

    for (std::size_t i = 0; i < sample.points.size(); ++i) {
        bool covered = false;
        for (std::size_t c : result.center_indices) {
            if (sample.metric(sample.points[i], sample.points[c]) <= eps) {
                covered = true;
                break;
            }
        }
        if (!covered) throw std::logic_error("greedy_net: post-check found an uncovered point");
    }
    return result;
}

CoverResult greedy_packing(const MetricSample& sample, double eps) {
    if (!(eps > 0.0)) throw ContractViolation("greedy_packing: eps must be positive");
    CoverResult result;
    result.kind = CoverResult::Kind::packing;
    result.epsilon = eps;
    result.center_indices = greedy_scan(sample, eps);
    result.size = result.center_indices.size();

    for (std::size_t i = 0; i < result.center_indices.size(); ++i)
        for (std::size_t j = i + 1; j < result.center_indices.size(); ++j)
            if (sample.metric(sample.points[result.center_indices[i]],
                              sample.points[result.center_indices[j]]) <= eps)
                throw std::logic_error("greedy_packing: post-check found a close center pair");
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
        bool blocked = false;
        for (std::size_t c : result.center_indices) {
            if (sample.metric(sample.points[i], sample.points[c]) <= eps) {
                blocked = true;
                break;
            }
        }
        if (!blocked) throw std::logic_error("greedy_packing: post-check found it non-maximal");
    }
    return result;
}

double regret_upper_bound(double net_size, double eps, double lipschitz, double episodes,
                          double horizon) {
    if (net_size < 0 || eps < 0 || lipschitz < 0 || episodes < 0 || horizon < 0)
        throw ContractViolation("regret_upper_bound: inputs must be nonnegative");
    return horizon * net_size + 2.0 * eps * lipschitz * episodes * horizon;
}

double optimal_epsilon(double diameter, double lipschitz, double episodes, int doubling_dim) {
    if (!(diameter > 0.0 && lipschitz > 0.0 && episodes > 0.0))
        throw ContractViolation("optimal_epsilon: D, L, K must be positive");
    if (doubling_dim < 1) throw ContractViolation("optimal_epsilon: d must be >= 1");
    double p = static_cast<double>(doubling_dim);
    return std::pow(diameter, p / (p + 1.0)) * std::pow(lipschitz * episodes, -1.0 / (p + 1.0));
}

double regret_lower_bound(double packing_size, double episodes, double horizon,
                          double tree_depth) {
    if (packing_size < 0 || episodes < 0 || horizon < 0 || tree_depth < 0)
        throw ContractViolation("regret_lower_bound: inputs must be nonnegative");
    double value_per_miss = horizon - tree_depth;
    if (value_per_miss <= 0.0) return 0.0; // degenerate: the tree eats the whole horizon
    if (packing_size <= 0.0) return 0.0;
    if (episodes < packing_size)
        return (1.0 - episodes / packing_size) * episodes * value_per_miss;
    return 0.5 * packing_size * value_per_miss;
}

} // namespace ucrl
