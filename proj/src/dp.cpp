#include "ucrl/dp.hpp"

#include <cmath>
#include <ostream>

namespace ucrl {

namespace {

std::int64_t snap_index(double x, double low, double mesh, std::int64_t n) {
    // nearest grid point, ties to the lower coordinate
    double t = (x - low) / mesh;
    std::int64_t j = static_cast<std::int64_t>(std::ceil(t - 0.5));
    if (j < 0) j = 0;
    if (j >= n) j = n - 1;
    return j;
}

} // namespace

std::int64_t ValueSolution::row_of(const State& s) const {
    if (!is_grid) return state_index(s);
    const auto& c = state_coords(s);
    return snap_index(c.at(0), grid_low, mesh, grid_points);
}

double ValueSolution::q_at(int stage, const State& s, int action) const {
    return q.at(static_cast<std::size_t>(stage - 1))
        .at(static_cast<std::size_t>(row_of(s)))
        .at(static_cast<std::size_t>(action));
}

double ValueSolution::v_at(int stage, const State& s) const {
    if (stage == horizon + 1) return 0.0;
    return v.at(static_cast<std::size_t>(stage - 1)).at(static_cast<std::size_t>(row_of(s)));
}

ValueSolution exact_dp(const Environment& env) {
    if (!env.finite())
        throw ContractViolation("exact_dp: environment is not finite");
    const std::int64_t S = *env.num_states;
    const int A = env.num_actions;
    const int H = env.horizon;

    // Query the environment once per pair.
    std::vector<std::vector<std::int64_t>> next(static_cast<std::size_t>(S),
                                                std::vector<std::int64_t>(static_cast<std::size_t>(A)));
    std::vector<std::vector<double>> rew(static_cast<std::size_t>(S),
                                         std::vector<double>(static_cast<std::size_t>(A)));
    for (std::int64_t s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            auto [ns, r] = step(env, finite_state(s), a);
            next[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = state_index(ns);
            rew[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = r;
        }
    }

    ValueSolution sol;
    sol.horizon = H;
    sol.q.assign(static_cast<std::size_t>(H),
                 std::vector<std::vector<double>>(static_cast<std::size_t>(S),
                                                  std::vector<double>(static_cast<std::size_t>(A), 0.0)));
    sol.v.assign(static_cast<std::size_t>(H),
                 std::vector<double>(static_cast<std::size_t>(S), 0.0));
    sol.greedy_action.assign(static_cast<std::size_t>(H),
                             std::vector<int>(static_cast<std::size_t>(S), 0));

    for (int h = H; h >= 1; --h) {
        auto& qh = sol.q[static_cast<std::size_t>(h - 1)];
        auto& vh = sol.v[static_cast<std::size_t>(h - 1)];
        auto& gh = sol.greedy_action[static_cast<std::size_t>(h - 1)];
        for (std::int64_t s = 0; s < S; ++s) {
            double best = -1.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                double value = rew[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
                if (h < H) {
                    std::int64_t ns = next[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
                    value += sol.v[static_cast<std::size_t>(h)][static_cast<std::size_t>(ns)];
                }
                qh[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = value;
                if (value > best) {
                    best = value;
                    best_a = a;
                }
            }
            vh[static_cast<std::size_t>(s)] = best;
            gh[static_cast<std::size_t>(s)] = best_a;
        }
    }
    sol.v_star_initial = sol.v_at(1, env.initial_state);
    return sol;
}

std::vector<std::vector<double>> policy_eval(
    const Environment& env, const std::function<int(std::int64_t, int)>& policy) {
    if (!env.finite())
        throw ContractViolation("policy_eval: environment is not finite");
    const std::int64_t S = *env.num_states;
    const int H = env.horizon;

    std::vector<std::vector<double>> v(static_cast<std::size_t>(H),
                                       std::vector<double>(static_cast<std::size_t>(S), 0.0));
    for (int h = H; h >= 1; --h) {
        for (std::int64_t s = 0; s < S; ++s) {
            int a = policy(s, h);
            auto [ns, r] = step(env, finite_state(s), a);
            double value = r;
            if (h < H)
                value += v[static_cast<std::size_t>(h)][static_cast<std::size_t>(state_index(ns))];
            v[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)] = value;
        }
    }
    return v;
}

ValueSolution grid_dp(const Environment& env, double mesh) {
    if (env.finite())
        throw ContractViolation("grid_dp: environment is finite; use exact_dp");
    if (!(mesh > 0.0))
        throw ContractViolation("grid_dp: mesh must be positive");
    if (!env.lipschitz)
        throw ContractViolation("grid_dp: environment does not declare Lipschitz constants");
    if (!env.state_low || !env.state_high)
        throw ContractViolation("grid_dp: environment does not declare state bounds");

    const double low = *env.state_low;
    const double high = *env.state_high;
    const std::int64_t N = static_cast<std::int64_t>(std::floor((high - low) / mesh + 0.5)) + 1;
    const int A = env.num_actions;
    const int H = env.horizon;

    ValueSolution sol;
    sol.horizon = H;
    sol.is_grid = true;
    sol.mesh = mesh;
    sol.grid_low = low;
    sol.grid_points = N;
    sol.error_bound = env.lipschitz->combined() * mesh * H;
    sol.coarse_mesh_warning = sol.error_bound >= static_cast<double>(H);

    std::vector<std::vector<std::int64_t>> next(static_cast<std::size_t>(N),
                                                std::vector<std::int64_t>(static_cast<std::size_t>(A)));
    std::vector<std::vector<double>> rew(static_cast<std::size_t>(N),
                                         std::vector<double>(static_cast<std::size_t>(A)));
    for (std::int64_t i = 0; i < N; ++i) {
        State s = real_state(low + static_cast<double>(i) * mesh);
        for (int a = 0; a < A; ++a) {
            auto [ns, r] = step(env, s, a);
            next[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] =
                snap_index(state_coords(ns).at(0), low, mesh, N);
            rew[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = r;
        }
    }

    sol.q.assign(static_cast<std::size_t>(H),
                 std::vector<std::vector<double>>(static_cast<std::size_t>(N),
                                                  std::vector<double>(static_cast<std::size_t>(A), 0.0)));
    sol.v.assign(static_cast<std::size_t>(H),
                 std::vector<double>(static_cast<std::size_t>(N), 0.0));
    sol.greedy_action.assign(static_cast<std::size_t>(H),
                             std::vector<int>(static_cast<std::size_t>(N), 0));

    for (int h = H; h >= 1; --h) {
        auto& qh = sol.q[static_cast<std::size_t>(h - 1)];
        auto& vh = sol.v[static_cast<std::size_t>(h - 1)];
        auto& gh = sol.greedy_action[static_cast<std::size_t>(h - 1)];
        for (std::int64_t i = 0; i < N; ++i) {
            double best = -1.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                double value = rew[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
                if (h < H) {
                    std::int64_t ni = next[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
                    value += sol.v[static_cast<std::size_t>(h)][static_cast<std::size_t>(ni)];
                }
                qh[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = value;
                if (value > best) {
                    best = value;
                    best_a = a;
                }
            }
            vh[static_cast<std::size_t>(i)] = best;
            gh[static_cast<std::size_t>(i)] = best_a;
        }
    }
    sol.v_star_initial = sol.v_at(1, env.initial_state);
    return sol;
}

void write_q_csv(const ValueSolution& sol, std::ostream& out) {
    out << "stage,state,action,q_value\n";
    char buf[64];
    for (int h = 1; h <= sol.horizon; ++h) {
        const auto& qh = sol.q[static_cast<std::size_t>(h - 1)];
        for (std::size_t i = 0; i < qh.size(); ++i) {
            for (std::size_t a = 0; a < qh[i].size(); ++a) {
                out << h << ',';
                if (sol.is_grid) {
                    std::snprintf(buf, sizeof buf, "%.17g",
                                  sol.grid_low + static_cast<double>(i) * sol.mesh);
                    out << buf;
                } else {
                    out << i;
                }
                std::snprintf(buf, sizeof buf, "%.17g", qh[i][a]);
                out << ',' << a << ',' << buf << '\n';
            }
        }
    }
}

} // namespace ucrl
