#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ucrl/harness.hpp"

using namespace ucrl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "ucrl_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const std::string& body) {
    fs::path path = dir / "config.txt";
    std::ofstream(path) << body;
    return path.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// regret.csv minus its wall-clock timing column, which cannot reproduce
std::string drop_timing_column(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
    return out.str();
}

} // namespace

TEST_CASE("fit_exponent recovers exact power laws") {
    std::vector<double> sqrt_series, linear_series;
    for (int k = 1; k <= 200; ++k) {
        sqrt_series.push_back(3.0 * std::sqrt(static_cast<double>(k)));
        linear_series.push_back(0.7 * k);
    }
    FitResult a = fit_exponent(sqrt_series, 100, 200);
    CHECK(a.exponent == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(a.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    FitResult b = fit_exponent(linear_series, 100, 200);
    CHECK(b.exponent == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit_exponent drops nonpositive entries and wants 5 points") {
    std::vector<double> series{0.0, 0.0, 0.0, 1.0, 1.5, 2.0, 2.2, 2.8};
    FitResult fit = fit_exponent(series, 1, 8);
    CHECK(fit.points_used == 5);
    CHECK_THROWS_AS((void)fit_exponent(series, 1, 6), ContractViolation);
}

TEST_CASE("config files parse, reject unknown keys, and validate") {
    fs::path dir = fresh_dir("config");
    std::string path = write_config(dir,
                                    "# comment line\n"
                                    "family = finite_random\n"
                                    "agent = tabular\n"
                                    "seed = 9\n"
                                    "episodes = 24\n"
                                    "horizon = 4  # trailing comment\n"
                                    "states = 3\n"
                                    "actions = 2\n"
                                    "k_values = 8, 16, 24\n");
    ExperimentConfig cfg = parse_config_file(path);
    CHECK(cfg.family == "finite_random");
    CHECK(cfg.seed == 9);
    CHECK(cfg.horizon == 4);
    CHECK(cfg.k_values == std::vector<int>{8, 16, 24});
    validate_config(cfg);

    std::string bad = write_config(dir, "familly = finite_random\n");
    CHECK_THROWS_AS((void)parse_config_file(bad), ContractViolation);

    cfg.agent = "ucrl-fa-linear";
    CHECK_THROWS_AS(validate_config(cfg), ContractViolation);
    cfg.agent = "tabular";
    cfg.family = "line_world";
    CHECK_THROWS_AS(validate_config(cfg), ContractViolation);
}

TEST_CASE("run_experiment writes artifacts and refuses accidental reruns") {
    fs::path dir = fresh_dir("run_tabular");
    ExperimentConfig cfg;
    cfg.family = "finite_random";
    cfg.agent = "tabular";
    cfg.seed = 5;
    cfg.states = 4;
    cfg.actions = 2;
    cfg.horizon = 3;
    cfg.episodes = 32;
    cfg.check_optimism = true;
    cfg.check_induction = true; // ignored for the tabular agent
    cfg.out = (dir / "out").string();

    CHECK(run_experiment(cfg) == 0);
    CHECK(fs::exists(dir / "out" / "regret.csv"));
    CHECK(fs::exists(dir / "out" / "summary.json"));
    CHECK(fs::exists(dir / "out" / "diagnostics.csv"));

    std::string summary = slurp(dir / "out" / "summary.json");
    CHECK(summary.find("\"all_pass\": true") != std::string::npos);
    CHECK(summary.find("regret_le_SAH") != std::string::npos);

    std::string csv = slurp(dir / "out" / "regret.csv");
    CHECK(csv.rfind("episode,episode_reward,instant_regret,cumulative_regret,buffer_size,"
                    "recompute_ms\n",
                    0) == 0);

    // a second run without --overwrite refuses and records the error
    CHECK(run_experiment(cfg) == 2);
    CHECK(fs::exists(dir / "out" / "error.json"));
    cfg.overwrite = true;
    CHECK(run_experiment(cfg) == 0);
}

TEST_CASE("run_experiment: linear agent verdicts on a cluster environment") {
    fs::path dir = fresh_dir("run_linear");
    ExperimentConfig cfg;
    cfg.family = "cluster_linear";
    cfg.agent = "ucrl-fa-linear";
    cfg.seed = 3;
    cfg.clusters = 4;
    cfg.states_per_cluster = 2;
    cfg.actions = 2;
    cfg.horizon = 4;
    cfg.episodes = 20;
    cfg.out = (dir / "out").string();
    CHECK(run_experiment(cfg) == 0);
    std::string summary = slurp(dir / "out" / "summary.json");
    CHECK(summary.find("regret_le_Hd") != std::string::npos);
    CHECK(summary.find("regretful_episodes_le_d") != std::string::npos);
}

TEST_CASE("run_experiment: line world with cover bound and diagnostics") {
    fs::path dir = fresh_dir("run_line");
    ExperimentConfig cfg;
    cfg.family = "line_world";
    cfg.agent = "ucrl-fa-nn";
    cfg.seed = 11;
    cfg.line_actions = 3;
    cfg.horizon = 3;
    cfg.episodes = 40;
    cfg.mesh = 1e-2;
    cfg.check_induction = true;
    cfg.out = (dir / "out").string();
    CHECK(run_experiment(cfg) == 0);
    std::string summary = slurp(dir / "out" / "summary.json");
    CHECK(summary.find("regret_le_cover_bound") != std::string::npos);
    CHECK(summary.find("eps_star") != std::string::npos);
}

TEST_CASE("verify mode runs diagnostics only") {
    fs::path dir = fresh_dir("verify");
    ExperimentConfig cfg;
    cfg.family = "finite_random";
    cfg.agent = "ucrl-fa-nn";
    cfg.seed = 2;
    cfg.states = 5;
    cfg.actions = 2;
    cfg.horizon = 3;
    cfg.episodes = 30;
    cfg.out = (dir / "out").string();
    CHECK(run_experiment(cfg, true) == 0);
    std::string summary = slurp(dir / "out" / "summary.json");
    CHECK(summary.find("\"optimism\"") != std::string::npos);
    CHECK(summary.find("\"induction\"") != std::string::npos);
    CHECK(summary.find("regret_le_SAH") == std::string::npos); // bounds are skipped
}

TEST_CASE("sweep aggregates per-seed runs and reruns reproduce the bytes") {
    fs::path dir = fresh_dir("sweep");
    ExperimentConfig cfg;
    cfg.family = "hard_instance";
    cfg.agent = "ucrl-fa-nn";
    cfg.seed = 1;
    cfg.seeds = 3;
    cfg.states = 10;
    cfg.actions = 2;
    cfg.horizon = 8;
    cfg.episodes = 8;
    cfg.k_values = {4, 8};
    cfg.out = (dir / "out").string();
    CHECK(run_sweep(cfg) == 0);
    CHECK(fs::exists(dir / "out" / "aggregate.csv"));
    CHECK(fs::exists(dir / "out" / "sweep.csv"));
    CHECK(fs::exists(dir / "out" / "seed_1" / "regret.csv"));
    CHECK(fs::exists(dir / "out" / "seed_3" / "regret.csv"));

    std::string aggregate = slurp(dir / "out" / "aggregate.csv");
    CHECK(aggregate.find("lower_bound_ref") != std::string::npos);

    std::string first = drop_timing_column(slurp(dir / "out" / "seed_2" / "regret.csv"));
    ExperimentConfig rerun = cfg;
    rerun.out = (dir / "out2").string();
    CHECK(run_sweep(rerun) == 0);
    CHECK(drop_timing_column(slurp(dir / "out2" / "seed_2" / "regret.csv")) == first);
}

TEST_CASE("oracle dump writes the q table") {
    fs::path dir = fresh_dir("oracle");
    ExperimentConfig cfg;
    cfg.family = "finite_random";
    cfg.agent = "tabular";
    cfg.states = 3;
    cfg.actions = 2;
    cfg.horizon = 2;
    cfg.out = (dir / "out").string();
    CHECK(dump_oracle(cfg) == 0);
    std::string table = slurp(dir / "out" / "q_table.csv");
    CHECK(table.rfind("stage,state,action,q_value\n", 0) == 0);
    // H * S * A data rows plus the header
    int lines = 0;
    for (char c : table)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + 2 * 3 * 2);
}
