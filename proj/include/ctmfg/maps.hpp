#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctmfg/errors.hpp"
#include "ctmfg/model.hpp"
#include "ctmfg/ode.hpp"

#if !defined(CTMFG_CHECK_SANDWICH) && !defined(NDEBUG)
#define CTMFG_CHECK_SANDWICH 1
#endif

// The three equilibrium maps (policy -> mean field, mean field -> action
// values, action values -> policy), the unregularized best response, and
// policy evaluation.
namespace ctmfg {

// Entries below this after a forward step mean dt is too coarse for the game.
inline constexpr double kSimplexCleanupThreshold = 1e-6;

struct BackwardSolution {
  ValueTable v;
  QTable q;
};

// alpha * log sum_u exp(q_u / alpha), shifted by the maximum.
inline double soft_maximum(std::span<const double> q, double alpha) {
  const double m = *std::ranges::max_element(q);
  double s = 0.0;
  for (double v : q) s += std::exp((v - m) / alpha);
  const double out = m + alpha * std::log(s);
#if CTMFG_CHECK_SANDWICH
  const double slack = 1e-12 * (1.0 + std::abs(m));
  if (!(out >= m - slack && out <= m + alpha * std::log(static_cast<double>(q.size())) + slack))
    throw NumericError("log-sum-exp left the [max, max + alpha log|U|] bracket");
#endif
  return out;
}

// Softmax of q / alpha written into `out`.
inline void softmax(std::span<const double> q, double alpha, std::span<double> out) {
  const double m = *std::ranges::max_element(q);
  double s = 0.0;
  for (std::size_t u = 0; u < q.size(); ++u) {
    out[u] = std::exp((q[u] - m) / alpha);
    s += out[u];
  }
  for (double& p : out) p /= s;
}

// sum_x mu0(x) V_0(x)
inline double initial_value(const GameModel& game, const ValueTable& v) {
  double out = 0.0;
  for (State x = 0; x < game.n_states(); ++x) out += game.mu0()[x] * v.at(0, x);
  return out;
}

namespace detail {

inline void check_grid(const GameModel& game, const TimeGrid& grid) {
  if (std::abs(grid.horizon() - game.horizon()) > 1e-9)
    throw DimensionMismatch("time grid horizon does not match the game horizon");
}

inline void check_policy(const GameModel& game, const Policy& pi, const TimeGrid& grid) {
  if (pi.n_intervals() != grid.n_steps() || pi.n_states() != game.n_states() ||
      pi.n_actions() != game.n_actions())
    throw DimensionMismatch("policy shape does not match game and grid");
}

inline void check_flow(const GameModel& game, const MeanFieldFlow& mu, const TimeGrid& grid) {
  if (mu.n_nodes() != grid.n_nodes() || mu.n_states() != game.n_states())
    throw DimensionMismatch("mean field shape does not match game and grid");
}

// Linear interpolation of the flow at time t inside interval k.
inline void flow_at(const MeanFieldFlow& mu, const TimeGrid& grid, std::size_t k, double t,
                    std::vector<double>& nu) {
  const double theta = ode::interval_fraction(grid, k, t);
  const auto a = mu.at(k);
  const auto b = mu.at(k + 1);
  nu.resize(a.size());
  for (std::size_t x = 0; x < a.size(); ++x) nu[x] = (1.0 - theta) * a[x] + theta * b[x];
}

inline void project_to_simplex(std::size_t node, std::vector<double>& p) {
  double sum = 0.0;
  for (double& v : p) {
    if (!(v >= -kSimplexCleanupThreshold))
      throw SimplexViolation("mean field entry " + std::to_string(v) + " at node " +
                             std::to_string(node) + " is below the cleanup threshold");
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  for (double& v : p) v /= sum;
}

inline QTable action_values(const GameModel& game, const MeanFieldFlow& mu, const ValueTable& v) {
  QTable q(v.n_nodes(), game.n_states(), game.n_actions());
  for (std::size_t k = 0; k < v.n_nodes(); ++k) {
    const FrozenModel m = game.freeze(mu.at(k));
    for (State x = 0; x < game.n_states(); ++x)
      for (Action u = 0; u < game.n_actions(); ++u) q.at(k, x, u) = m.action_value(x, u, v.at(k));
  }
  return q;
}

inline ValueTable to_value_table(const std::vector<ode::Vector>& nodes, const GameModel& game) {
  ValueTable v(nodes.size(), game.n_states());
  for (std::size_t k = 0; k < nodes.size(); ++k) std::ranges::copy(nodes[k], v.at(k).begin());
  // Exact terminal condition regardless of integration roundoff.
  const auto q = game.terminal_values();
  std::ranges::copy(q, v.at(nodes.size() - 1).begin());
  return v;
}

// Backward pass of dV/dt = -H(x, Q(x, .)) with H supplied per state.
template <typename Hamiltonian>
ValueTable backward_values(const GameModel& game, const MeanFieldFlow& mu,
                           const TimeGrid& grid, Hamiltonian&& hamiltonian) {
  check_grid(game, grid);
  check_flow(game, mu, grid);
  const std::size_t n = game.n_states();
  const std::size_t na = game.n_actions();
  std::vector<double> nu;
  std::vector<double> q(na);
  FrozenModel m(n, na);
  auto field = [&](std::size_t k, double t, const ode::Vector& v) {
    flow_at(mu, grid, k, t, nu);
    game.freeze_into(nu, m);
    ode::Vector d(n);
    for (State x = 0; x < n; ++x) {
      for (Action u = 0; u < na; ++u) q[u] = m.action_value(x, u, v);
      d[x] = -hamiltonian(k, x, std::span<const double>(q));
    }
    return d;
  };
  const auto nodes =
      ode::integrate_grid(field, game.terminal_values(), grid, ode::Direction::backward);
  return to_value_table(nodes, game);
}

template <typename Hamiltonian>
BackwardSolution backward_pass(const GameModel& game, const MeanFieldFlow& mu,
                               const TimeGrid& grid, Hamiltonian&& hamiltonian) {
  BackwardSolution out;
  out.v = backward_values(game, mu, grid, std::forward<Hamiltonian>(hamiltonian));
  out.q = action_values(game, mu, out.v);
  return out;
}

}  // namespace detail

// Mean field induced by `policy`: RK4 on the master equation
//   d mu(x)/dt = sum_{y,u} rate(y, x, u, mu) mu(y) pi(u|y)
// with clamp-and-renormalize after each step.
inline MeanFieldFlow forward_mean_field(const GameModel& game, const Policy& policy,
                                        const TimeGrid& grid) {
  detail::check_grid(game, grid);
  detail::check_policy(game, policy, grid);
  const std::size_t n = game.n_states();
  const std::size_t na = game.n_actions();
  FrozenModel m(n, na);
  auto field = [&](std::size_t k, double, const ode::Vector& mu) {
    game.freeze_into(mu, m);
    ode::Vector d(n, 0.0);
    for (State y = 0; y < n; ++y) {
      const auto pi = policy.at(k, y);
      for (Action u = 0; u < na; ++u) {
        const double mass = mu[y] * pi[u];
        if (mass == 0.0) continue;
        for (State x = 0; x < n; ++x) {
          if (x == y) continue;
          const double flux = m.rate(u, y, x) * mass;
          d[x] += flux;
          d[y] -= flux;
        }
      }
    }
    return d;
  };
  const ode::Vector start(game.mu0().begin(), game.mu0().end());
  const auto nodes = ode::integrate_grid(field, start, grid, ode::Direction::forward,
                                         detail::project_to_simplex);
  MeanFieldFlow flow(grid.n_nodes(), n);
  for (std::size_t k = 0; k < nodes.size(); ++k) std::ranges::copy(nodes[k], flow.at(k).begin());
  return flow;
}

// Soft value and action values for a fixed mean field:
//   dV/dt = -alpha log sum_u exp(Q(x,u) / alpha),  V_T = q.
inline BackwardSolution backward_soft_hjb(const GameModel& game, const MeanFieldFlow& mu,
                                          double alpha, const TimeGrid& grid) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  return detail::backward_pass(game, mu, grid,
                               [alpha](std::size_t, State, std::span<const double> q) {
                                 return soft_maximum(q, alpha);
                               });
}

// Unregularized optimal value: dV/dt = -max_u Q(x,u),  V_T = q.
inline BackwardSolution backward_hard_hjb(const GameModel& game, const MeanFieldFlow& mu,
                                          const TimeGrid& grid) {
  return detail::backward_pass(game, mu, grid, [](std::size_t, State, std::span<const double> q) {
    return *std::ranges::max_element(q);
  });
}

// Policy on interval k is the softmax of Q at node k.
inline Policy softmax_policy(const QTable& q, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (q.n_nodes() < 2) throw DimensionMismatch("action values need at least two nodes");
  Policy pi(q.n_nodes() - 1, q.n_states(), q.n_actions());
  for (std::size_t k = 0; k < pi.n_intervals(); ++k)
    for (State x = 0; x < q.n_states(); ++x) softmax(q.at(k, x), alpha, pi.at(k, x));
  return pi;
}

// Deterministic argmax policy; ties go to the lowest action index.
inline Policy greedy_policy(const QTable& q) {
  if (q.n_nodes() < 2) throw DimensionMismatch("action values need at least two nodes");
  Policy pi(q.n_nodes() - 1, q.n_states(), q.n_actions());
  for (std::size_t k = 0; k < pi.n_intervals(); ++k) {
    for (State x = 0; x < q.n_states(); ++x) {
      const auto row = q.at(k, x);
      const auto best = static_cast<std::size_t>(std::ranges::max_element(row) - row.begin());
      pi.at(k, x, best) = 1.0;
    }
  }
  return pi;
}

// Values of a fixed policy `pi_hat` against a fixed flow `mu`, including the
// entropy bonus alpha * H(pi_hat). alpha = 0 gives the unregularized value.
inline ValueTable policy_values(const GameModel& game, const Policy& pi_hat,
                                const MeanFieldFlow& mu, double alpha, const TimeGrid& grid) {
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be nonnegative");
  detail::check_policy(game, pi_hat, grid);
  return detail::backward_values(game, mu, grid,
                                 [&](std::size_t k, State x, std::span<const double> q) {
                                 const auto p = pi_hat.at(k, x);
                                 double h = 0.0;
                                 for (std::size_t u = 0; u < q.size(); ++u)
                                   if (p[u] > 0.0) h += p[u] * q[u];
                                 return alpha > 0.0 ? h + alpha * entropy(p) : h;
                                 });
}

// J(pi_hat, pi) with mu = flow of the population policy pi.
inline double evaluate_policy(const GameModel& game, const Policy& pi_hat,
                              const MeanFieldFlow& mu, double alpha, const TimeGrid& grid) {
  return initial_value(game, policy_values(game, pi_hat, mu, alpha, grid));
}

}  // namespace ctmfg
