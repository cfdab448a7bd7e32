#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "ucrl/mdp.hpp"

namespace ucrl {

// Ground-truth value functions from backward induction. For finite
// environments the tables are exact; for 1-d continuous environments they
// live on a uniform grid and carry an explicit error bound.
//
// Indexing: q[h-1][state][action] and v[h-1][state] for stages h in [1, H].
// V at stage H+1 is identically zero and not stored.
struct ValueSolution {
    int horizon = 0;
    std::vector<std::vector<std::vector<double>>> q;
    std::vector<std::vector<double>> v;
    std::vector<std::vector<int>> greedy_action; // lowest-index maximizer
    double v_star_initial = 0.0;

    bool is_grid = false;
    double mesh = 0.0;
    double grid_low = 0.0;
    std::int64_t grid_points = 0;
    double error_bound = 0.0;       // grid case: lipschitz.combined() * mesh * H
    bool coarse_mesh_warning = false;

    // Row index for a state: identity for finite solutions, nearest grid
    // point (ties to the lower coordinate) for grid solutions.
    std::int64_t row_of(const State& s) const;

    double q_at(int stage, const State& s, int action) const;
    double v_at(int stage, const State& s) const;
};

// Exact solver for finite environments.
ValueSolution exact_dp(const Environment& env);

// Evaluates an arbitrary policy (state index, stage) -> action on a finite
// environment; returns v_pi[h-1][state].
std::vector<std::vector<double>> policy_eval(
    const Environment& env, const std::function<int(std::int64_t, int)>& policy);

// Grid-discretized solver for continuous 1-d environments. Next states snap
// to the nearest grid point; the environment must declare Lipschitz constants
// and state bounds so the result can carry error_bound.
ValueSolution grid_dp(const Environment& env, double mesh);

// Debug export: one row per (stage, state, action) with the q value.
void write_q_csv(const ValueSolution& sol, std::ostream& out);

} // namespace ucrl
