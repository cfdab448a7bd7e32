#include "ucrl/agents.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace ucrl {

TabularAgent::TabularAgent(std::int64_t num_states, int num_actions, int horizon)
    : states_(num_states), actions_(num_actions), horizon_(horizon) {
    if (num_states < 1 || num_actions < 1 || horizon < 1)
        throw ContractViolation("TabularAgent: S, A, H must all be >= 1");
    const std::size_t pairs = static_cast<std::size_t>(states_) * static_cast<std::size_t>(actions_);
    q_.assign(static_cast<std::size_t>(horizon_) * pairs, static_cast<double>(horizon_));
    reward_est_.assign(pairs, 1.0);
    next_est_.assign(pairs, -1);
    bonus_.assign(pairs, static_cast<double>(horizon_));
}

void TabularAgent::plan() {
    const std::size_t pairs = static_cast<std::size_t>(states_) * static_cast<std::size_t>(actions_);
    const double h_cap = static_cast<double>(horizon_);
    for (int h = horizon_; h >= 1; --h) {
        double* qh = q_.data() + static_cast<std::size_t>(h - 1) * pairs;
        const double* qnext = q_.data() + static_cast<std::size_t>(h) * pairs;
        for (std::int64_t s = 0; s < states_; ++s) {
            for (int a = 0; a < actions_; ++a) {
                std::size_t i = pair(s, a);
                if (h == horizon_) {
                    qh[i] = reward_est_[i];
                    continue;
                }
                double future = 0.0; // unknown next state contributes nothing
                if (next_est_[i] >= 0) {
                    const double* row = qnext + pair(next_est_[i], 0);
                    future = row[0];
                    for (int a2 = 1; a2 < actions_; ++a2)
                        if (row[a2] > future) future = row[a2];
                }
                double value = reward_est_[i] + future + bonus_[i];
                qh[i] = value < h_cap ? value : h_cap;
            }
        }
    }
}

int TabularAgent::act(std::int64_t state, int stage) const {
    const std::size_t pairs = static_cast<std::size_t>(states_) * static_cast<std::size_t>(actions_);
    const double* row = q_.data() + static_cast<std::size_t>(stage - 1) * pairs + pair(state, 0);
    int best = 0;
    for (int a = 1; a < actions_; ++a)
        if (row[a] > row[best]) best = a;
    return best;
}

void TabularAgent::observe(const TransitionRecord& t) {
    if (!(t.reward >= 0.0 && t.reward <= 1.0))
        throw ContractViolation("observe: reward outside [0,1]");
    std::size_t i = pair(state_index(t.state), t.action);
    std::int64_t next = state_index(t.next_state);
    if (bonus_[i] == 0.0) {
        if (reward_est_[i] != t.reward || next_est_[i] != next)
            throw DeterminismViolation(
                "observe: revisited pair returned a different reward or next state");
        return;
    }
    reward_est_[i] = t.reward;
    next_est_[i] = next;
    bonus_[i] = 0.0;
}

double TabularAgent::q(int stage, std::int64_t state, int action) const {
    const std::size_t pairs = static_cast<std::size_t>(states_) * static_cast<std::size_t>(actions_);
    return q_.at(static_cast<std::size_t>(stage - 1) * pairs + pair(state, action));
}

bool TabularAgent::visited(std::int64_t state, int action) const {
    return bonus_.at(pair(state, action)) == 0.0;
}

LayeredQEstimate ucrlfa_recompute(const ExperienceBuffer& buffer, const Metric& metric,
                                  double l1, int num_actions, int horizon, OracleKind kind,
                                  const FeatureMap* feature_map) {
    if (kind == OracleKind::linear_span && feature_map == nullptr)
        throw ContractViolation("ucrlfa_recompute: linear oracle needs a feature map");

    LayeredQEstimate est;
    est.horizon = horizon;
    est.num_actions = num_actions;
    est.stages.reserve(static_cast<std::size_t>(horizon));

    const auto& records = buffer.records();
    KeyValueSet keys;
    keys.reserve(records.size());

    std::vector<OptimisticQEvaluator> stages(static_cast<std::size_t>(horizon),
                                             OptimisticQEvaluator::tabular({}, 0.0));
    for (int h = horizon; h >= 1; --h) {
        const double cap = static_cast<double>(horizon - h + 1);
        keys.clear();
        if (h == horizon) {
            for (const auto& rec : records)
                keys.push_back(KeyValue{StateAction{rec.state, rec.action}, rec.reward});
        } else {
            const auto& next_stage = stages[static_cast<std::size_t>(h)];
            for (const auto& rec : records) {
                double v_next = next_stage.max_over_actions(rec.next_state, num_actions);
                keys.push_back(KeyValue{StateAction{rec.state, rec.action}, rec.reward + v_next});
            }
        }
        switch (kind) {
        case OracleKind::nearest_neighbor:
            stages[static_cast<std::size_t>(h - 1)] =
                OptimisticQEvaluator::nearest_neighbor(keys, metric, l1, cap);
            break;
        case OracleKind::linear_span:
            stages[static_cast<std::size_t>(h - 1)] =
                OptimisticQEvaluator::linear_span(keys, *feature_map, cap);
            break;
        case OracleKind::tabular:
            stages[static_cast<std::size_t>(h - 1)] = OptimisticQEvaluator::tabular(keys, cap);
            break;
        }
    }
    est.stages = std::move(stages);
    return est;
}

double min_optimism_margin(const LayeredQEstimate& est, const Environment& env,
                           const ValueSolution& oracle, int grid_stride) {
    double worst = std::numeric_limits<double>::infinity();
    if (!oracle.is_grid) {
        const std::int64_t S = *env.num_states;
        for (int h = 1; h <= est.horizon; ++h) {
            for (std::int64_t s = 0; s < S; ++s) {
                State state = finite_state(s);
                for (int a = 0; a < env.num_actions; ++a) {
                    double margin = est.evaluate(h, state, a) - oracle.q_at(h, state, a);
                    if (margin < worst) worst = margin;
                }
            }
        }
        return worst;
    }
    if (grid_stride < 1) grid_stride = 1;
    for (int h = 1; h <= est.horizon; ++h) {
        for (std::int64_t i = 0; i < oracle.grid_points; i += grid_stride) {
            State state = real_state(oracle.grid_low + static_cast<double>(i) * oracle.mesh);
            for (int a = 0; a < env.num_actions; ++a) {
                double margin = est.evaluate(h, state, a) - oracle.q_at(h, state, a);
                if (margin < worst) worst = margin;
            }
        }
    }
    return worst;
}

namespace {

double sum_rewards(const std::vector<double>& rewards) {
    double total = 0.0;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) total = *it + total;
    return total;
}

double tabular_min_optimism(const TabularAgent& agent, const ValueSolution& oracle) {
    double worst = std::numeric_limits<double>::infinity();
    for (int h = 1; h <= agent.horizon(); ++h)
        for (std::int64_t s = 0; s < agent.num_states(); ++s)
            for (int a = 0; a < agent.num_actions(); ++a) {
                double margin = agent.q(h, s, a) - oracle.q_at(h, finite_state(s), a);
                if (margin < worst) worst = margin;
            }
    return worst;
}

RunResult run_tabular(const Environment& env, const RunOptions& opts) {
    if (!env.finite())
        throw ContractViolation("run_training: tabular agent needs a finite environment");
    if (opts.check_optimism && opts.oracle == nullptr)
        throw ContractViolation("run_training: optimism check needs an oracle solution");

    TabularAgent agent(*env.num_states, env.num_actions, env.horizon);
    RunResult result;
    result.min_optimism_margin = std::numeric_limits<double>::infinity();
    result.min_induction_margin = std::numeric_limits<double>::infinity();

    std::vector<double> rewards;
    for (int k = 1; k <= opts.episodes; ++k) {
        State s = env.initial_state;
        rewards.clear();
        for (int h = 1; h <= env.horizon; ++h) {
            int a = agent.act(state_index(s), h);
            auto [ns, r] = step(env, s, a);
            agent.observe(TransitionRecord{s, a, ns, r, k, h});
            rewards.push_back(r);
            s = ns;
        }
        auto t0 = std::chrono::steady_clock::now();
        agent.plan();
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        double instant = episode_regret(opts.v_star_initial, rewards);
        result.ledger.add(k, sum_rewards(rewards), instant,
                          static_cast<std::int64_t>(k) * env.horizon, ms);

        if (opts.check_optimism && (k % opts.optimism_every == 0 || k == opts.episodes)) {
            double margin = tabular_min_optimism(agent, *opts.oracle);
            result.episode_checks.push_back(EpisodeCheck{k, margin, 0.0});
            if (margin < result.min_optimism_margin) result.min_optimism_margin = margin;
        }
    }
    if (opts.check_optimism)
        result.optimism_ok = result.min_optimism_margin >= -opts.tol;
    return result;
}

RunResult run_ucrl_fa(AgentKind kind, const Environment& env, const RunOptions& opts) {
    if (kind == AgentKind::ucrl_fa_linear && (env.feature_dim < 1 || !env.feature_map))
        throw ContractViolation("run_training: linear agent needs an environment feature map");
    if (opts.check_optimism && opts.oracle == nullptr)
        throw ContractViolation("run_training: optimism check needs an oracle solution");

    double l1 = 0.0;
    double combined = 0.0;
    if (opts.l1_override) {
        l1 = *opts.l1_override;
        combined = ((env.lipschitz ? env.lipschitz->l2 : 1.0) + 1.0) * l1;
    } else if (env.lipschitz) {
        l1 = env.lipschitz->l1;
        combined = env.lipschitz->combined();
    } else if (kind == AgentKind::ucrl_fa_nn) {
        throw ContractViolation(
            "run_training: nearest-neighbor agent needs Lipschitz constants or --l1-override");
    }

    const OracleKind oracle_kind = kind == AgentKind::ucrl_fa_linear
                                       ? OracleKind::linear_span
                                       : OracleKind::nearest_neighbor;
    FeatureMap fmap;
    if (kind == AgentKind::ucrl_fa_linear) fmap = FeatureMap{env.feature_dim, env.feature_map};
    const FeatureMap* fmap_ptr = kind == AgentKind::ucrl_fa_linear ? &fmap : nullptr;

    const double oracle_slack = opts.oracle ? opts.oracle->error_bound : 0.0;
    const int H = env.horizon;

    RunResult result;
    result.min_optimism_margin = std::numeric_limits<double>::infinity();
    result.min_induction_margin = std::numeric_limits<double>::infinity();

    ExperienceBuffer buffer;
    LayeredQEstimate est =
        ucrlfa_recompute(buffer, env.metric, l1, env.num_actions, H, oracle_kind, fmap_ptr);

    std::vector<TransitionRecord> trajectory;
    std::vector<double> rewards, gaps;
    for (int k = 1; k <= opts.episodes; ++k) {
        State s = env.initial_state;
        trajectory.clear();
        rewards.clear();
        gaps.clear();
        for (int h = 1; h <= H; ++h) {
            int a = est.act(h, s);
            auto [ns, r] = step(env, s, a);
            trajectory.push_back(TransitionRecord{s, a, ns, r, k, h});
            rewards.push_back(r);
            if (opts.check_induction)
                gaps.push_back(nearest_gap(buffer, StateAction{s, a}, env.metric));
            s = ns;
        }

        double sum_gaps = 0.0;
        if (opts.check_induction) {
            for (int h = 1; h <= H; ++h) {
                const auto& rec = trajectory[static_cast<std::size_t>(h - 1)];
                double gap = gaps[static_cast<std::size_t>(h - 1)];
                double lhs = est.evaluate(h, rec.state, rec.action);
                double rhs = rec.reward;
                if (h < H) {
                    const auto& next = trajectory[static_cast<std::size_t>(h)];
                    rhs += est.evaluate(h + 1, next.state, next.action);
                }
                double bonus = std::isinf(gap) ? std::numeric_limits<double>::infinity()
                                               : combined * gap;
                double margin = std::isinf(bonus) ? std::numeric_limits<double>::infinity()
                                                  : rhs + bonus - lhs;
                StepDiagnostic diag;
                diag.episode = k;
                diag.stage = h;
                diag.gap = gap;
                diag.induction_margin = margin;
                diag.optimism_margin = std::numeric_limits<double>::quiet_NaN();
                if (opts.check_optimism && opts.oracle)
                    diag.optimism_margin =
                        lhs - opts.oracle->q_at(h, rec.state, rec.action);
                result.steps.push_back(diag);
                if (margin < result.min_induction_margin) result.min_induction_margin = margin;
                sum_gaps += gap;
            }
        }

        buffer.append_episode(trajectory, H);
        auto t0 = std::chrono::steady_clock::now();
        est = ucrlfa_recompute(buffer, env.metric, l1, env.num_actions, H, oracle_kind, fmap_ptr);
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();

        double instant = episode_regret(opts.v_star_initial, rewards);
        result.ledger.add(k, sum_rewards(rewards), instant,
                          static_cast<std::int64_t>(buffer.size()), ms);

        bool sweep = opts.check_optimism && (k % opts.optimism_every == 0 || k == opts.episodes);
        if (sweep || opts.check_induction) {
            EpisodeCheck check;
            check.episode = k;
            check.min_optimism_margin = std::numeric_limits<double>::quiet_NaN();
            if (sweep) {
                check.min_optimism_margin =
                    min_optimism_margin(est, env, *opts.oracle, opts.optimism_grid_stride);
                if (check.min_optimism_margin < result.min_optimism_margin)
                    result.min_optimism_margin = check.min_optimism_margin;
            }
            double decomposition = std::isinf(sum_gaps)
                                       ? static_cast<double>(H)
                                       : std::min(static_cast<double>(H), combined * sum_gaps);
            check.regret_decomposition_margin =
                opts.check_induction ? decomposition - instant : std::numeric_limits<double>::quiet_NaN();
            result.episode_checks.push_back(check);
        }
    }

    if (opts.check_optimism)
        result.optimism_ok = result.min_optimism_margin >= -(opts.tol + oracle_slack);
    if (opts.check_induction)
        result.induction_ok = result.min_induction_margin >= -opts.tol;
    result.final_estimate = std::move(est);
    return result;
}

} // namespace

RunResult run_training(AgentKind kind, const Environment& env, const RunOptions& opts) {
    if (opts.episodes < 1)
        throw ContractViolation("run_training: episodes must be >= 1");
    if (kind == AgentKind::tabular) return run_tabular(env, opts);
    return run_ucrl_fa(kind, env, opts);
}

} // namespace ucrl
