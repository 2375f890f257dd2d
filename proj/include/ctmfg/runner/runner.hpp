#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ctmfg/algorithms.hpp"
#include "ctmfg/games.hpp"
#include "ctmfg/metrics.hpp"
#include "ctmfg/runner/config.hpp"
#include "ctmfg/runner/csv.hpp"

// Runs configured experiments and writes their CSV outputs.
namespace ctmfg::runner {

struct RunSummary {
  SolverKind solver = SolverKind::fictitious_play;
  double alpha = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double delta_j = 0.0;
  double delta_j_re = 0.0;
  double objective = 0.0;
  std::optional<double> mean_infected_fraction;  // SIS only
};

// File stem shared by all outputs of one (solver, alpha) run, e.g. "fp_alpha_0.1".
inline std::string run_stem(SolverKind solver, double alpha) {
  return std::string(solver_name(solver)) + "_alpha_" + format_double(alpha);
}

inline constexpr std::string_view kColumnsDoc =
    R"(Output files (comma separated, one header line, shortest round-trip floats)

summary.csv
  solver                  fp (fictitious play) or fpi (fixed-point iteration)
  alpha                   entropy temperature
  iterations              number of trace records
  converged               1 if the policy change fell below policy_tol
  delta_j                 Nash gap of the returned policy
  delta_j_re              regularized gap of the returned policy
  objective               regularized objective of the returned policy against its own flow
  mean_infected_fraction  (sis only) time-averaged infected share of the returned policy's flow

trace_<solver>_alpha_<alpha>.csv     one row per iteration k (record k scores the iterate pi^k)
  k                 iteration index
  delta_j           Nash gap of pi^k (nan when record_nash_gap is off)
  delta_j_re        regularized gap of pi^k
  policy_delta      sup_{t,x,u} |pi^{k+1} - pi^k|
  mean_field_delta  sup_t L1 distance between consecutive mean fields
                    (fp: the averaged fields, fpi: the induced fields)
  objective         regularized objective of pi^k against its own flow

flow_<solver>_alpha_<alpha>.csv      mean field induced by the returned policy
avgflow_fp_alpha_<alpha>.csv         fictitious play's averaged mean field
  t, state_0, ..., state_{n-1}    one row per grid node

policy_<solver>_alpha_<alpha>.csv    returned policy, constant on [t_k, t_{k+1})
  k, x, u, prob
)";

inline void write_summary(std::ostream& os, const std::vector<RunSummary>& rows, bool with_infected) {
  os << "solver,alpha,iterations,converged,delta_j,delta_j_re,objective";
  if (with_infected) os << ",mean_infected_fraction";
  os << '\n';
  for (const auto& r : rows) {
    os << solver_name(r.solver) << ',' << format_double(r.alpha) << ',' << r.iterations << ','
       << (r.converged ? 1 : 0) << ',' << format_double(r.delta_j) << ','
       << format_double(r.delta_j_re) << ',' << format_double(r.objective);
    if (with_infected) os << ',' << format_double(r.mean_infected_fraction.value_or(0.0));
    os << '\n';
  }
}

// Executes one (solver, alpha) job and writes its per-run files.
inline RunSummary run_single(const ExperimentConfig& cfg, const GameModel& game, SolverKind solver,
                             double alpha) {
  SolverConfig sc = cfg.solver;
  sc.alpha = alpha;
  const SolveResult res = solve(solver, game, sc);
  const TimeGrid grid(game.horizon(), sc.dt);
  const std::filesystem::path dir(cfg.out_dir);
  const std::string stem = run_stem(solver, alpha);

  emit_trace(res.trace, (dir / ("trace_" + stem + ".csv")).string());
  if (cfg.write_flows) {
    emit_flow(res.flow, grid, (dir / ("flow_" + stem + ".csv")).string());
    if (solver == SolverKind::fictitious_play)
      emit_flow(res.averaged_flow, grid, (dir / ("avgflow_" + stem + ".csv")).string());
  }
  if (cfg.write_policies) emit_policy(res.policy, (dir / ("policy_" + stem + ".csv")).string());

  RunSummary s;
  s.solver = solver;
  s.alpha = alpha;
  s.iterations = res.trace.size();
  s.converged = res.converged;
  s.delta_j = res.delta_j;
  s.delta_j_re = res.delta_j_re;
  s.objective = res.objective;
  if (cfg.game.name == "sis") s.mean_infected_fraction = games::mean_infected_fraction(res.flow, grid);
  return s;
}

// Runs every (solver, alpha) pair. Independent runs execute in parallel; each
// run is sequential and writes only its own files, so outputs do not depend
// on the thread count.
inline std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg) {
  const GameModel game = build_game(cfg.game);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());

  struct Job {
    SolverKind solver;
    double alpha;
  };
  std::vector<Job> jobs;
  for (SolverKind s : cfg.solvers)
    for (double a : cfg.alphas) jobs.push_back({s, a});

  std::vector<RunSummary> rows(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i] = run_single(cfg, game, jobs[i].solver, jobs[i].alpha);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, jobs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::filesystem::path dir(cfg.out_dir);
  write_file((dir / "summary.csv").string(),
             [&](std::ostream& os) { write_summary(os, rows, cfg.game.name == "sis"); });
  write_file((dir / "columns.txt").string(), [](std::ostream& os) { os << kColumnsDoc; });
  return rows;
}

struct GapReport {
  double alpha = 0.0;
  double delta_j = 0.0;
  double delta_j_re = 0.0;
};

// Gaps of a stored policy for every temperature in the config.
inline std::vector<GapReport> evaluate_stored_policy(const ExperimentConfig& cfg,
                                                     const std::string& policy_path) {
  const GameModel game = build_game(cfg.game);
  const TimeGrid grid(game.horizon(), cfg.solver.dt);
  const Policy pi = load_policy(policy_path, grid.n_steps(), game.n_states(), game.n_actions());
  const MeanFieldFlow mu = forward_mean_field(game, pi, grid);
  std::vector<GapReport> out;
  const double dj = nash_gap_for_flow(game, pi, mu, grid);
  for (double a : cfg.alphas) out.push_back({a, dj, regularized_gap_for_flow(game, pi, mu, a, grid)});
  return out;
}

inline void write_gap_reports(std::ostream& os, const std::vector<GapReport>& reports) {
  os << "alpha,delta_j,delta_j_re\n";
  for (const auto& r : reports)
    os << format_double(r.alpha) << ',' << format_double(r.delta_j) << ','
       << format_double(r.delta_j_re) << '\n';
}

}  // namespace ctmfg::runner
