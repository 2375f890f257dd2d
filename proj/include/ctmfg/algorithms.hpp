#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "ctmfg/errors.hpp"
#include "ctmfg/maps.hpp"
#include "ctmfg/metrics.hpp"
#include "ctmfg/model.hpp"

// Equilibrium learning: fixed-point iteration and fictitious play.
namespace ctmfg {

enum class SolverKind { fixed_point, fictitious_play };

inline std::string_view solver_name(SolverKind kind) {
  return kind == SolverKind::fixed_point ? "fpi" : "fp";
}

struct SolveResult {
  Policy policy;  // pi^K
  IterationTrace trace;
  MeanFieldFlow flow;           // flow induced by pi^K
  MeanFieldFlow averaged_flow;  // fictitious play's running average; equals `flow` for FPI
  bool converged = false;       // stopped on the policy-change tolerance
  // Gaps and objective of the returned policy.
  double delta_j = std::numeric_limits<double>::quiet_NaN();
  double delta_j_re = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct IterateScore {
  double delta_j;
  double delta_j_re;
  double objective;
};

// Scores `pi` against its own flow. `soft` must be the soft backward pass on `mu`.
inline IterateScore score_iterate(const GameModel& game, const Policy& pi, const MeanFieldFlow& mu,
                                  const BackwardSolution& soft, double alpha, bool with_nash_gap,
                                  const TimeGrid& grid) {
  IterateScore s{};
  s.objective = evaluate_policy(game, pi, mu, alpha, grid);
  s.delta_j_re = initial_value(game, soft.v) - s.objective;
  s.delta_j = with_nash_gap ? nash_gap_for_flow(game, pi, mu, grid)
                            : std::numeric_limits<double>::quiet_NaN();
  return s;
}

inline Policy initial_policy(const GameModel& game, const TimeGrid& grid,
                             const std::optional<Policy>& start) {
  if (!start) return uniform_policy(grid, game.n_states(), game.n_actions());
  check_policy(game, *start, grid);
  if (!start->is_normalized()) throw InvalidArgument("initial policy is not normalized");
  return *start;
}

}  // namespace detail

// pi^{k+1} = softmax(Q(mu(pi^k))) until max_iters or the sup-norm policy change
// drops below policy_tol. Non-convergence is reported through the trace.
inline SolveResult fixed_point_iteration(const GameModel& game, const SolverConfig& config,
                                         const std::optional<Policy>& start = std::nullopt) {
  config.validate();
  const TimeGrid grid(game.horizon(), config.dt);
  SolveResult out;
  Policy pi = detail::initial_policy(game, grid, start);
  MeanFieldFlow mu = forward_mean_field(game, pi, grid);

  for (std::size_t k = 0; k < config.max_iters; ++k) {
    if (k > 0) {
      MeanFieldFlow next = forward_mean_field(game, pi, grid);
      out.trace.back().mean_field_delta = sup_distance(next, mu);
      mu = std::move(next);
    }
    const BackwardSolution soft = backward_soft_hjb(game, mu, config.alpha, grid);
    const auto score = detail::score_iterate(game, pi, mu, soft, config.alpha,
                                             config.record_nash_gap, grid);
    Policy next = softmax_policy(soft.q, config.alpha);

    IterationRecord rec;
    rec.k = k;
    rec.delta_j = score.delta_j;
    rec.delta_j_re = score.delta_j_re;
    rec.objective = score.objective;
    rec.policy_delta = sup_distance(next, pi);
    out.trace.push_back(rec);

    pi = std::move(next);
    if (rec.policy_delta < config.policy_tol) {
      out.converged = true;
      break;
    }
  }

  MeanFieldFlow final_flow = forward_mean_field(game, pi, grid);
  out.trace.back().mean_field_delta = sup_distance(final_flow, mu);
  const BackwardSolution soft = backward_soft_hjb(game, final_flow, config.alpha, grid);
  const auto score = detail::score_iterate(game, pi, final_flow, soft, config.alpha, true, grid);
  out.delta_j = score.delta_j;
  out.delta_j_re = score.delta_j_re;
  out.objective = score.objective;
  out.policy = std::move(pi);
  out.flow = std::move(final_flow);
  out.averaged_flow = out.flow;
  return out;
}

// Best response to a geometrically averaged mean field:
//   pi^{k+1} = softmax(Q(mu^k)),  mu^{k+1} = (1 - beta) mu(pi^{k+1}) + beta mu^k.
// Trace record k scores pi^k against the flow pi^k itself induces.
inline SolveResult fictitious_play(const GameModel& game, const SolverConfig& config,
                                   const std::optional<Policy>& start = std::nullopt) {
  config.validate();
  const TimeGrid grid(game.horizon(), config.dt);
  SolveResult out;
  Policy pi = detail::initial_policy(game, grid, start);
  MeanFieldFlow induced = forward_mean_field(game, pi, grid);
  MeanFieldFlow averaged = induced;
  BackwardSolution induced_soft = backward_soft_hjb(game, induced, config.alpha, grid);

  for (std::size_t k = 0; k < config.max_iters; ++k) {
    const auto score = detail::score_iterate(game, pi, induced, induced_soft, config.alpha,
                                             config.record_nash_gap, grid);
    const BackwardSolution soft =
        k == 0 ? induced_soft : backward_soft_hjb(game, averaged, config.alpha, grid);
    Policy next = softmax_policy(soft.q, config.alpha);
    MeanFieldFlow next_induced = forward_mean_field(game, next, grid);

    MeanFieldFlow next_averaged(grid.n_nodes(), game.n_states());
    for (std::size_t n = 0; n < grid.n_nodes(); ++n)
      for (State x = 0; x < game.n_states(); ++x)
        next_averaged.at(n, x) =
            (1.0 - config.beta) * next_induced.at(n, x) + config.beta * averaged.at(n, x);

    IterationRecord rec;
    rec.k = k;
    rec.delta_j = score.delta_j;
    rec.delta_j_re = score.delta_j_re;
    rec.objective = score.objective;
    rec.policy_delta = sup_distance(next, pi);
    rec.mean_field_delta = sup_distance(next_averaged, averaged);
    out.trace.push_back(rec);

    pi = std::move(next);
    induced = std::move(next_induced);
    averaged = std::move(next_averaged);
    induced_soft = backward_soft_hjb(game, induced, config.alpha, grid);
    if (rec.policy_delta < config.policy_tol) {
      out.converged = true;
      break;
    }
  }

  const auto score = detail::score_iterate(game, pi, induced, induced_soft, config.alpha, true, grid);
  out.delta_j = score.delta_j;
  out.delta_j_re = score.delta_j_re;
  out.objective = score.objective;
  out.policy = std::move(pi);
  out.flow = std::move(induced);
  out.averaged_flow = std::move(averaged);
  return out;
}

inline SolveResult solve(SolverKind kind, const GameModel& game, const SolverConfig& config,
                         const std::optional<Policy>& start = std::nullopt) {
  return kind == SolverKind::fixed_point ? fixed_point_iteration(game, config, start)
                                         : fictitious_play(game, config, start);
}

}  // namespace ctmfg
