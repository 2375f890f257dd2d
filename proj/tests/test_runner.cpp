#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "ctmfg/runner/runner.hpp"

using namespace ctmfg;
using namespace ctmfg::runner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ctmfg_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

ExperimentConfig parse(const std::string& yaml, const std::vector<std::string>& overrides = {}) {
  YAML::Node root = load_yaml(yaml);
  apply_overrides(root, overrides);
  return parse_config(root);
}

int run_cli(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const std::string cmd = std::string(CTMFG_CLI_PATH) + " " + args + " > " + stdout_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Csv, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0, 12345.678901234567,
                   std::numeric_limits<double>::denorm_min()})
    EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(0.4), "0.4");
  EXPECT_EQ(format_double(50.0), "50");
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
  EXPECT_THROW(parse_double("1.0x"), ParseError);
  EXPECT_THROW(parse_index("-1"), ParseError);
}

TEST(Csv, TraceRoundTrip) {
  IterationTrace trace;
  for (std::size_t k = 0; k < 4; ++k) {
    IterationRecord r;
    r.k = k;
    r.delta_j = 0.1 / (k + 1);
    r.delta_j_re = 0.01 / (k + 3);
    r.policy_delta = 1.0 / 7.0;
    r.mean_field_delta = 2e-17;
    r.objective = -3.3;
    trace.push_back(r);
  }
  std::stringstream ss;
  write_trace(ss, trace);
  EXPECT_EQ(count_lines(ss.str()), 5u);
  EXPECT_EQ(read_trace(ss), trace);

  std::stringstream empty;
  write_trace(empty, {});
  EXPECT_EQ(empty.str(), std::string(kTraceHeader) + "\n");
  EXPECT_TRUE(read_trace(empty).empty());
}

TEST(Csv, FlowHasOneRowPerNode) {
  const TimeGrid grid(1.0, 0.25);
  MeanFieldFlow flow(grid.n_nodes(), 2);
  for (std::size_t k = 0; k < grid.n_nodes(); ++k) {
    flow.at(k, 0) = 0.4;
    flow.at(k, 1) = 0.6;
  }
  std::stringstream ss;
  write_flow(ss, flow, grid);
  const auto text = ss.str();
  EXPECT_EQ(count_lines(text), grid.n_nodes() + 1);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,state_0,state_1");
  EXPECT_NE(text.find("\n0,0.4,0.6\n"), std::string::npos);
  EXPECT_NE(text.find("\n1,0.4,0.6\n"), std::string::npos);
}

TEST(Csv, PolicyRoundTripAndValidation) {
  const TimeGrid grid(1.0, 0.5);
  auto pi = uniform_policy(grid, 2, 2);
  pi.at(1, 0, 0) = 1.0 / 3.0;
  pi.at(1, 0, 1) = 2.0 / 3.0;
  std::stringstream ss;
  write_policy(ss, pi);
  const auto text = ss.str();
  EXPECT_EQ(count_lines(text), 1u + 2 * 2 * 2);
  std::stringstream in(text);
  const auto back = read_policy(in, 2, 2, 2);
  EXPECT_EQ(sup_distance(back, pi), 0.0);

  std::stringstream dup(text + "0,0,0,0.5\n");
  EXPECT_THROW(read_policy(dup, 2, 2, 2), ParseError);
  std::stringstream missing(text.substr(0, text.rfind("1,1,1")));
  EXPECT_THROW(read_policy(missing, 2, 2, 2), DimensionMismatch);
  std::stringstream wrong_shape(text);
  EXPECT_THROW(read_policy(wrong_shape, 2, 3, 2), DimensionMismatch);
  std::string bad = text;
  bad.replace(bad.find("0,0,0,0.5"), 9, "0,0,0,0.7");
  std::stringstream unnormalized(bad);
  EXPECT_THROW(read_policy(unnormalized, 2, 2, 2), ParseError);
}

TEST(Config, DefaultsAndSections) {
  const auto cfg = parse("game: {name: sis}\nsolver: {name: [fp, fpi], alpha: [0.1, 1]}\n");
  EXPECT_EQ(cfg.game.name, "sis");
  ASSERT_EQ(cfg.solvers.size(), 2u);
  EXPECT_EQ(cfg.solvers[1], SolverKind::fixed_point);
  EXPECT_EQ(cfg.alphas, (std::vector<double>{0.1, 1.0}));
  EXPECT_EQ(cfg.solver.beta, 0.5);
  EXPECT_EQ(cfg.solver.max_iters, 100u);
  EXPECT_EQ(cfg.out_dir, "out");
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse("game: {name: sis, colour: red}\nsolver: {alpha: 1}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha: 1, gamma: 2}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha: 1}\nextra: 1\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: chess}\nsolver: {alpha: 1}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha: -1}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha: 1, beta: 1.5}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha: 1, dt: 0.03}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha: abc}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {name: sarsa, alpha: 1}\n"), ConfigError);
  EXPECT_THROW(parse("game: {name: random, n_states: 0}\nsolver: {alpha: 1}\n"), ConfigError);
  EXPECT_THROW(load_yaml("game: [unclosed"), ConfigError);
}

TEST(Config, OverridesReplaceValues) {
  const std::string base = "game: {name: random, seed: 1}\nsolver: {name: fp, alpha: 0.1}\n";
  const auto cfg = parse(base, {"game.seed=42", "solver.alpha=[0.5, 0.25]", "output.dir=/tmp/x",
                                "solver.beta=0.75"});
  EXPECT_EQ(cfg.game.random.seed, 42u);
  EXPECT_EQ(cfg.alphas, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(cfg.out_dir, "/tmp/x");
  EXPECT_EQ(cfg.solver.beta, 0.75);
  EXPECT_THROW(parse(base, {"noequals"}), ConfigError);
  EXPECT_THROW(parse(base, {"game.seed.deep=1"}), ConfigError);
  EXPECT_THROW(parse(base, {"solver.unknown=1"}), ConfigError);
}

TEST(Config, AlphaSweepIsLogSpacedWithExactEndpoints) {
  const auto cfg = parse("game: {name: sis}\nsolver: {alpha_sweep: {min: 0.1, max: 10, count: 5}}\n");
  ASSERT_EQ(cfg.alphas.size(), 5u);
  EXPECT_EQ(cfg.alphas.front(), 0.1);
  EXPECT_EQ(cfg.alphas.back(), 10.0);
  EXPECT_EQ(cfg.alphas[2], 1.0);
  EXPECT_NEAR(cfg.alphas[1] / cfg.alphas[0], cfg.alphas[4] / cfg.alphas[3], 1e-10);  // 12-digit rounding
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha: 1, alpha_sweep: {min: 1, max: 2, count: 2}}\n"),
               ConfigError);
  EXPECT_THROW(parse("game: {name: sis}\nsolver: {alpha_sweep: {min: 0, max: 2, count: 2}}\n"),
               ConfigError);
}

TEST(Runner, WritesExpectedFilesAndIsReproducible) {
  const auto dir_a = scratch("repro_a");
  const auto dir_b = scratch("repro_b");
  const std::string yaml =
      "game: {name: random, seed: 2, n_states: 3, horizon: 1}\n"
      "solver: {name: [fp, fpi], alpha: [0.5, 0.1], max_iters: 4}\n"
      "output: {policies: true, threads: 2}\n";
  auto cfg = parse(yaml, {"output.dir=" + dir_a.string()});
  const auto rows = run_experiment(cfg);
  ASSERT_EQ(rows.size(), 4u);
  cfg.out_dir = dir_b.string();
  cfg.threads = 1;
  run_experiment(cfg);

  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(dir_b / entry.path().filename())) << entry.path();
  }
  // summary + columns + 4 traces + 4 flows + 2 averaged flows + 4 policies
  EXPECT_EQ(files, 16u);
  const auto trace = load_trace((dir_a / "trace_fp_alpha_0.5.csv").string());
  EXPECT_EQ(trace.size(), 4u);
  EXPECT_EQ(count_lines(slurp(dir_a / "flow_fpi_alpha_0.1.csv")), 102u);
  EXPECT_TRUE(fs::exists(dir_a / "avgflow_fp_alpha_0.1.csv"));
  EXPECT_FALSE(fs::exists(dir_a / "avgflow_fpi_alpha_0.1.csv"));
}

TEST(Runner, SweepRunsAreIndependent) {
  const auto dir_sweep = scratch("sweep");
  const auto dir_single = scratch("single");
  const std::string yaml = "game: {name: left-right}\nsolver: {name: fp, max_iters: 3}\n";
  run_experiment(parse(yaml, {"solver.alpha=[1, 0.3]", "output.dir=" + dir_sweep.string()}));
  run_experiment(parse(yaml, {"solver.alpha=0.3", "output.dir=" + dir_single.string()}));
  EXPECT_EQ(slurp(dir_sweep / "trace_fp_alpha_0.3.csv"), slurp(dir_single / "trace_fp_alpha_0.3.csv"));
  EXPECT_EQ(slurp(dir_sweep / "flow_fp_alpha_0.3.csv"), slurp(dir_single / "flow_fp_alpha_0.3.csv"));
}

TEST(Runner, SisSummaryHasInfectedColumn) {
  const auto dir = scratch("sis");
  run_experiment(parse("game: {name: sis}\nsolver: {name: fp, alpha: 1, max_iters: 2}\n",
                       {"output.dir=" + dir.string()}));
  const auto summary = slurp(dir / "summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')),
            "solver,alpha,iterations,converged,delta_j,delta_j_re,objective,mean_infected_fraction");
  EXPECT_EQ(count_lines(summary), 2u);
  EXPECT_TRUE(fs::exists(dir / "columns.txt"));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const auto config = dir / "lr.yaml";
  std::ofstream(config) << "game: {name: left-right}\nsolver: {name: fp, alpha: 1, max_iters: 2}\n"
                           "output: {policies: true}\n";
  std::ofstream(dir / "bad.yaml") << "game: {name: left-right, bogus: 1}\nsolver: {alpha: 1}\n";

  const auto out = dir / "out";
  EXPECT_EQ(run_cli("run " + config.string() + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_EQ(run_cli("run " + (dir / "bad.yaml").string()), 2);
  EXPECT_EQ(run_cli("run " + (dir / "missing.yaml").string()), 2);
  EXPECT_EQ(run_cli("run " + config.string() + " --override solver.alpha=-1"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("--help"), 0);

  const auto policy = out / "policy_fp_alpha_1.csv";
  const auto gaps = dir / "gaps.csv";
  EXPECT_EQ(run_cli("gap " + config.string() + " --policy " + policy.string() + " --override 'solver.alpha=[1,0.5]'",
                    gaps.string()),
            0);
  const auto report = slurp(gaps);
  EXPECT_EQ(report.substr(0, report.find('\n')), "alpha,delta_j,delta_j_re");
  EXPECT_EQ(count_lines(report), 3u);
  EXPECT_EQ(run_cli("gap " + config.string() + " --policy " + (dir / "nope.csv").string()), 1);
  std::ofstream(dir / "trunc.csv") << "k,x,u,prob\n0,0,0,1\n";
  EXPECT_EQ(run_cli("gap " + config.string() + " --policy " + (dir / "trunc.csv").string()), 2);
}
