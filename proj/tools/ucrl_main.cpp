#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "ucrl/harness.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    std::optional<std::string> out;
    bool overwrite = false;
    bool check_optimism = false;
    bool check_induction = false;
    std::optional<double> l1_override;
};

void attach(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("config", flags.config_path, "experiment config file")->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--episodes", flags.episodes, "override the episode count");
    cmd->add_option("--out", flags.out, "override the output directory");
    cmd->add_flag("--overwrite", flags.overwrite, "replace an existing completed run");
    cmd->add_flag("--check-optimism", flags.check_optimism, "enable the optimism diagnostic");
    cmd->add_flag("--check-induction", flags.check_induction, "enable the induction diagnostic");
    cmd->add_option("--l1-override", flags.l1_override,
                    "run with this Lipschitz constant instead of the declared one");
}

ucrl::ExperimentConfig load(const CommonFlags& flags) {
    ucrl::ExperimentConfig cfg = ucrl::parse_config_file(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.episodes) cfg.episodes = *flags.episodes;
    if (flags.out) cfg.out = *flags.out;
    if (flags.overwrite) cfg.overwrite = true;
    if (flags.check_optimism) cfg.check_optimism = true;
    if (flags.check_induction) cfg.check_induction = true;
    if (flags.l1_override) cfg.l1_override = flags.l1_override;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"upper-confidence reinforcement learning experiments on deterministic MDPs"};
    app.require_subcommand(1);

    CommonFlags run_flags, sweep_flags, verify_flags, oracle_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "run one seeded experiment with verdicts");
    attach(run_cmd, run_flags);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a multi-seed sweep and aggregate");
    attach(sweep_cmd, sweep_flags);
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "diagnostics-only run (optimism and induction checks)");
    attach(verify_cmd, verify_flags);
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "dump the ground-truth q table of the configured environment");
    attach(oracle_cmd, oracle_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return ucrl::run_experiment(load(run_flags));
        if (sweep_cmd->parsed()) return ucrl::run_sweep(load(sweep_flags));
        if (verify_cmd->parsed()) return ucrl::run_experiment(load(verify_flags), true);
        if (oracle_cmd->parsed()) return ucrl::dump_oracle(load(oracle_flags));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
