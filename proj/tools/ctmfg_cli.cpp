// Command line front end for the mean field game solvers.
//
//   ctmfg run <config> [--out DIR] [--override key=value ...]
//   ctmfg gap <config> --policy <file> [--override key=value ...]
//
// Exit codes: 0 success (also for runs that did not converge), 1 I/O error,
// 2 configuration error, 3 numeric failure.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctmfg/runner/runner.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void print_summary(const std::vector<ctmfg::runner::RunSummary>& rows) {
  for (const auto& r : rows) {
    std::cout << ctmfg::solver_name(r.solver) << " alpha=" << ctmfg::runner::format_double(r.alpha)
              << " iterations=" << r.iterations << (r.converged ? " converged" : " not-converged")
              << " delta_j=" << r.delta_j << " delta_j_re=" << r.delta_j_re;
    if (r.mean_infected_fraction) std::cout << " mean_infected=" << *r.mean_infected_fraction;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-regularized equilibria of continuous-time finite-state mean field games"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string policy_path;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run the solvers described by a config file");
  run->add_option("config", config_path, "YAML experiment config")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_option("--override", overrides, "Override a config value, e.g. solver.alpha=0.5");

  auto* gap = app.add_subcommand("gap", "Recompute distance-to-equilibrium of a stored policy");
  gap->add_option("config", config_path, "YAML experiment config (game, dt, alpha)")->required();
  gap->add_option("--policy", policy_path, "Policy CSV with columns k,x,u,prob")->required();
  gap->add_option("--override", overrides, "Override a config value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (!out_dir.empty()) overrides.push_back("output.dir=" + out_dir);
    const auto cfg = ctmfg::runner::load_config(config_path, overrides);
    if (*run) {
      print_summary(ctmfg::runner::run_experiment(cfg));
    } else {
      ctmfg::runner::write_gap_reports(std::cout,
                                       ctmfg::runner::evaluate_stored_policy(cfg, policy_path));
    }
  } catch (const ctmfg::runner::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ctmfg::runner::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ctmfg::DimensionMismatch& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ctmfg::runner::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ctmfg::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ctmfg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
