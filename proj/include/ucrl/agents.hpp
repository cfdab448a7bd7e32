#pragma once

#include <optional>
#include <vector>

#include "ucrl/approximators.hpp"
#include "ucrl/dp.hpp"
#include "ucrl/mdp.hpp"

namespace ucrl {

// Upper-confidence planner for finite deterministic environments. Keeps
// point estimates of reward and transition plus a bonus of H on every
// unvisited pair, and replans by backward induction after each episode.
// Construction matches the all-H initial tables; plan() produces the
// dynamic-programming update (stage H holds the reward estimate itself).
class TabularAgent {
public:
    TabularAgent(std::int64_t num_states, int num_actions, int horizon);

    void plan();
    int act(std::int64_t state, int stage) const; // lowest-index argmax
    void observe(const TransitionRecord& t);      // idempotent on consistent revisits

    double q(int stage, std::int64_t state, int action) const;
    bool visited(std::int64_t state, int action) const;
    std::int64_t num_states() const { return states_; }
    int num_actions() const { return actions_; }
    int horizon() const { return horizon_; }

private:
    std::size_t pair(std::int64_t s, int a) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(actions_) +
               static_cast<std::size_t>(a);
    }

    std::int64_t states_;
    int actions_;
    int horizon_;
    std::vector<double> q_;              // horizon_ * S * A
    std::vector<double> reward_est_;     // init 1
    std::vector<std::int64_t> next_est_; // init -1 = unknown
    std::vector<double> bonus_;          // init H; 0 exactly when visited
};

// Per-stage optimistic value estimates rebuilt from the experience buffer
// after each episode. stages[h-1] carries cap H-h+1, the tightest a-priori
// bound on stage-h values.
struct LayeredQEstimate {
    int horizon = 0;
    int num_actions = 0;
    std::vector<OptimisticQEvaluator> stages;

    double evaluate(int stage, const State& s, int action) const {
        return stages.at(static_cast<std::size_t>(stage - 1)).evaluate(s, action);
    }
    double value(int stage, const State& s) const {
        return stages.at(static_cast<std::size_t>(stage - 1)).max_over_actions(s, num_actions);
    }
    int act(int stage, const State& s) const {
        return stages.at(static_cast<std::size_t>(stage - 1)).argmax_action(s, num_actions);
    }
};

enum class OracleKind { nearest_neighbor, linear_span, tabular };

// Backward pass over the buffer: stage H fits the observed rewards (cap 1);
// stage h fits r_i + max_a'' Q̂_{h+1}(f(s_i,a_i), a'') at the observed pairs
// (cap H-h+1). An empty buffer yields the caps everywhere.
LayeredQEstimate ucrlfa_recompute(const ExperienceBuffer& buffer, const Metric& metric,
                                  double l1, int num_actions, int horizon,
                                  OracleKind kind = OracleKind::nearest_neighbor,
                                  const FeatureMap* feature_map = nullptr);

enum class AgentKind { tabular, ucrl_fa_nn, ucrl_fa_linear };

struct RunOptions {
    int episodes = 1;
    std::uint64_t seed = 0;      // recorded in outputs; the agents are deterministic
    double v_star_initial = 0.0;
    const ValueSolution* oracle = nullptr; // required for optimism checks
    bool check_optimism = false;
    bool check_induction = false;
    int optimism_every = 1;      // episode stride for full optimism sweeps
    int optimism_grid_stride = 20; // state subsampling for grid oracles
    std::optional<double> l1_override;
    double tol = 1e-6;
};

struct StepDiagnostic {
    int episode = 0;
    int stage = 0;
    double gap = 0.0;              // nearest_gap of the visited pair in B^(k)
    double induction_margin = 0.0; // slack of the per-step inequality; >= -tol expected
    double optimism_margin = 0.0;  // Q̂ - Q* at the visited pair (NaN when unchecked)
};

struct EpisodeCheck {
    int episode = 0;
    double min_optimism_margin = 0.0;        // over the full table / check grid
    double regret_decomposition_margin = 0.0; // min(H, L*sum gaps) - instant regret
};

struct RunResult {
    RegretLedger ledger;
    std::vector<StepDiagnostic> steps;
    std::vector<EpisodeCheck> episode_checks;
    double min_optimism_margin = 0.0;
    double min_induction_margin = 0.0;
    bool optimism_ok = true;
    bool induction_ok = true;
    std::optional<LayeredQEstimate> final_estimate; // ucrl agents
};

// Minimum of Q̂ - Q* over every tabulated (stage, state, action); grid
// oracles are subsampled by grid_stride states.
double min_optimism_margin(const LayeredQEstimate& est, const Environment& env,
                           const ValueSolution& oracle, int grid_stride = 1);

RunResult run_training(AgentKind kind, const Environment& env, const RunOptions& opts);

} // namespace ucrl
