#pragma once

#include <cstddef>
#include <vector>

#include "ucrl/mdp.hpp"

namespace ucrl {

// Finite point cloud standing in for the state-action space; nets and
// packings are computed over it, so their sizes estimate the continuum
// quantities at the cloud's resolution.
struct MetricSample {
    std::vector<StateAction> points;
    Metric metric = Metric::discrete(0.0);
};

struct CoverResult {
    enum class Kind { net, packing };
    Kind kind = Kind::net;
    double epsilon = 0.0;
    std::vector<std::size_t> center_indices; // into the sample
    std::size_t size = 0;
};

// First-uncovered greedy scan: walk the sample in order and keep any point
// farther than eps from every kept center. The result covers the sample
// within eps, and the centers are pairwise > eps apart. Both constructions
// share this scan, which is what makes packing(2e) <= net(e) <= packing(e)
// hold on the returned sizes. Coverage is re-verified before returning.
CoverResult greedy_net(const MetricSample& sample, double eps);

// Same scan, packing post-conditions: pairwise distances > eps and maximality
// (no sample point can be added) are re-verified before returning.
CoverResult greedy_packing(const MetricSample& sample, double eps);

// H * net_size + 2 * eps * L * K * H.
double regret_upper_bound(double net_size, double eps, double lipschitz, double episodes,
                          double horizon);

// The eps minimizing the bound when net size scales as (D/eps)^d:
// D^{d/(d+1)} * (L*K)^{-1/(d+1)}.
double optimal_epsilon(double diameter, double lipschitz, double episodes, int doubling_dim);

// Empirical reference line for hard-instance sweeps: with K below the packing
// size, (1 - K/packing) * K * (H - tree_depth); past it, half the packing
// times (H - tree_depth). Degenerate depths (>= H) give 0.
double regret_lower_bound(double packing_size, double episodes, double horizon,
                          double tree_depth);

} // namespace ucrl
