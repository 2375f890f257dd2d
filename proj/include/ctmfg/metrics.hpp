#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ctmfg/errors.hpp"
#include "ctmfg/maps.hpp"
#include "ctmfg/model.hpp"

// Distance-to-equilibrium metrics and per-iteration diagnostics.
namespace ctmfg {

struct IterationRecord {
  std::size_t k = 0;
  // Gaps and objective of the iterate pi^k.
  double delta_j = std::numeric_limits<double>::quiet_NaN();
  double delta_j_re = std::numeric_limits<double>::quiet_NaN();
  // d(pi^{k+1}, pi^k) and d(mu^{k+1}, mu^k).
  double policy_delta = std::numeric_limits<double>::quiet_NaN();
  double mean_field_delta = std::numeric_limits<double>::quiet_NaN();
  // J^RE(pi^k, pi^k)
  double objective = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

using IterationTrace = std::vector<IterationRecord>;

// Largest absolute entrywise difference between two policies.
inline double sup_distance(const Policy& a, const Policy& b) {
  if (a.n_intervals() != b.n_intervals() || a.n_states() != b.n_states() ||
      a.n_actions() != b.n_actions())
    throw DimensionMismatch("policies have different shapes");
  double d = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) d = std::max(d, std::abs(da[i] - db[i]));
  return d;
}

// sup over nodes of the L1 distance between the node distributions.
inline double sup_distance(const MeanFieldFlow& a, const MeanFieldFlow& b) {
  if (a.n_nodes() != b.n_nodes() || a.n_states() != b.n_states())
    throw DimensionMismatch("mean fields have different shapes");
  double d = 0.0;
  for (std::size_t k = 0; k < a.n_nodes(); ++k) {
    double l1 = 0.0;
    for (State x = 0; x < a.n_states(); ++x) l1 += std::abs(a.at(k, x) - b.at(k, x));
    d = std::max(d, l1);
  }
  return d;
}

// Best-response value minus the value of `pi` itself, both against the flow
// `mu` that `pi` induces. The best response comes from one backward pass.
inline double nash_gap_for_flow(const GameModel& game, const Policy& pi, const MeanFieldFlow& mu,
                                const TimeGrid& grid) {
  const double best = initial_value(game, backward_hard_hjb(game, mu, grid).v);
  return best - evaluate_policy(game, pi, mu, 0.0, grid);
}

inline double regularized_gap_for_flow(const GameModel& game, const Policy& pi,
                                       const MeanFieldFlow& mu, double alpha,
                                       const TimeGrid& grid) {
  const double best = initial_value(game, backward_soft_hjb(game, mu, alpha, grid).v);
  return best - evaluate_policy(game, pi, mu, alpha, grid);
}

inline double nash_gap(const GameModel& game, const Policy& pi, const TimeGrid& grid) {
  return nash_gap_for_flow(game, pi, forward_mean_field(game, pi, grid), grid);
}

inline double regularized_gap(const GameModel& game, const Policy& pi, double alpha,
                              const TimeGrid& grid) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  return regularized_gap_for_flow(game, pi, forward_mean_field(game, pi, grid), alpha, grid);
}

}  // namespace ctmfg
