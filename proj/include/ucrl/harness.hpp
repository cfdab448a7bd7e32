#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ucrl/agents.hpp"
#include "ucrl/environments.hpp"
#include "ucrl/mdp.hpp"

namespace ucrl {

// Everything a seeded experiment needs, parsed from a key = value config file
// (documented in the README) plus CLI overrides. Unknown keys are rejected.
struct ExperimentConfig {
    std::string family = "finite_random"; // finite_random | line_world | hard_instance | cluster_linear
    std::string agent = "tabular";        // tabular | ucrl-fa-nn | ucrl-fa-linear
    std::uint64_t seed = 1;
    int episodes = 100;
    int horizon = 5;

    std::int64_t states = 10;  // finite_random, hard_instance
    int actions = 2;
    int clusters = 4;          // cluster_linear
    int states_per_cluster = 2;
    double slope = 1.0;        // line_world
    int line_actions = 5;

    double mesh = 1e-3;        // grid oracle resolution and sample mesh

    bool check_optimism = false;
    bool check_induction = false;
    int optimism_every = 1;
    int optimism_grid_stride = 20;
    std::optional<double> l1_override;
    bool check_exponent = false;
    double exponent_lo = 0.35;
    double exponent_hi = 0.65;

    int seeds = 1;                 // sweep width
    std::vector<int> k_values;     // sweep checkpoints; defaults to {episodes}

    std::string out = "out";
    bool overwrite = false;
};

ExperimentConfig parse_config_file(const std::string& path);
void validate_config(const ExperimentConfig& config);

// Least-squares fit of log(cumulative regret) against log(episode) over the
// inclusive episode window; entries that are not strictly positive are
// dropped. Throws when fewer than 5 usable points remain.
struct FitResult {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int window_begin = 0;
    int window_end = 0;
    std::size_t points_used = 0;
};

FitResult fit_exponent(const std::vector<double>& cumulative_regret, int begin_episode,
                       int end_episode);

struct Verdict {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double bound = 0.0;
};

// Built environment plus the generation records needed for verdicts.
struct BuiltEnvironment {
    Environment env;
    std::optional<HardInstanceSpec> hard;
    std::optional<ClusterLinearSpec> cluster;
};

BuiltEnvironment build_environment(const ExperimentConfig& config, std::uint64_t seed);

// Runs one seeded experiment, writes regret.csv / summary.json (and
// diagnostics.csv when checks are on) under config.out, and returns 0 iff
// every enabled verdict passed. diagnostics_only skips the bound verdicts.
int run_experiment(const ExperimentConfig& config, bool diagnostics_only = false);

// Runs config.seeds seeded copies in parallel, writes per-seed directories
// plus sweep.csv and aggregate.csv (mean and stddev of cumulative regret per
// checkpoint, with the lower-bound reference line for hard instances).
int run_sweep(const ExperimentConfig& config);

// Writes the ground-truth q table of the configured environment as CSV.
int dump_oracle(const ExperimentConfig& config);

} // namespace ucrl
