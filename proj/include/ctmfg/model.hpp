#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctmfg/errors.hpp"

namespace ctmfg {

using State = std::size_t;
using Action = std::size_t;

// Off-diagonal jump rate from `from` to `to` under `action` when the
// population distribution is `nu`. Never called with from == to.
using RateFunction =
    std::function<double(State from, State to, Action action, std::span<const double> nu)>;
using RewardFunction = std::function<double(State x, Action u, std::span<const double> nu)>;
using TerminalFunction = std::function<double(State x)>;

inline constexpr double kSimplexTolerance = 1e-12;

inline bool is_probability_vector(std::span<const double> p, double tol = kSimplexTolerance) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Rates and rewards of a game evaluated at one fixed population distribution.
// rate(u, x, y) includes the diagonal, so every row sums to zero.
class FrozenModel {
 public:
  FrozenModel(std::size_t n_states, std::size_t n_actions)
      : n_states_(n_states),
        n_actions_(n_actions),
        rates_(n_actions * n_states * n_states, 0.0),
        rewards_(n_states * n_actions, 0.0) {}

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }

  double rate(Action u, State from, State to) const {
    return rates_[(u * n_states_ + from) * n_states_ + to];
  }
  double& rate(Action u, State from, State to) {
    return rates_[(u * n_states_ + from) * n_states_ + to];
  }
  double reward(State x, Action u) const { return rewards_[x * n_actions_ + u]; }
  double& reward(State x, Action u) { return rewards_[x * n_actions_ + u]; }

  // Q(x,u) = r(x,u) + sum_y rate(x,y,u) V(y)
  double action_value(State x, Action u, std::span<const double> values) const {
    double q = reward(x, u);
    const double* row = &rates_[(u * n_states_ + x) * n_states_];
    for (State y = 0; y < n_states_; ++y) q += row[y] * values[y];
    return q;
  }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> rates_;
  std::vector<double> rewards_;
};

// A continuous-time finite-state mean field game. Only off-diagonal rates are
// supplied; the generator diagonal is always derived from them.
class GameModel {
 public:
  GameModel(std::size_t n_states, std::size_t n_actions, double horizon,
            RateFunction off_diagonal_rate, RewardFunction reward, TerminalFunction terminal,
            std::vector<double> mu0)
      : n_states_(n_states),
        n_actions_(n_actions),
        horizon_(horizon),
        rate_(std::move(off_diagonal_rate)),
        reward_(std::move(reward)),
        terminal_(std::move(terminal)),
        mu0_(std::move(mu0)) {
    if (n_states_ == 0) throw InvalidArgument("game needs at least one state");
    if (n_actions_ == 0) throw InvalidArgument("game needs at least one action");
    if (!(horizon_ >= 0.0) || !std::isfinite(horizon_))
      throw InvalidArgument("horizon must be a finite nonnegative number");
    if (!rate_ || !reward_ || !terminal_) throw InvalidArgument("game functions must be set");
    if (mu0_.size() != n_states_)
      throw DimensionMismatch("initial distribution has " + std::to_string(mu0_.size()) +
                              " entries, expected " + std::to_string(n_states_));
    if (!is_probability_vector(mu0_))
      throw InvalidArgument("initial distribution must be nonnegative and sum to 1");
  }

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  double horizon() const { return horizon_; }
  std::span<const double> mu0() const { return mu0_; }

  double rate(State from, State to, Action u, std::span<const double> nu) const {
    if (from != to) return rate_(from, to, u, nu);
    double out = 0.0;
    for (State y = 0; y < n_states_; ++y)
      if (y != from) out += rate_(from, y, u, nu);
    return -out;
  }

  double reward(State x, Action u, std::span<const double> nu) const { return reward_(x, u, nu); }
  double terminal(State x) const { return terminal_(x); }

  std::vector<double> terminal_values() const {
    std::vector<double> q(n_states_);
    for (State x = 0; x < n_states_; ++x) q[x] = terminal_(x);
    return q;
  }

  FrozenModel freeze(std::span<const double> nu) const {
    FrozenModel m(n_states_, n_actions_);
    freeze_into(nu, m);
    return m;
  }

  // Same as freeze() but reuses the storage of `m`.
  void freeze_into(std::span<const double> nu, FrozenModel& m) const {
    if (m.n_states() != n_states_ || m.n_actions() != n_actions_) m = FrozenModel(n_states_, n_actions_);
    for (Action u = 0; u < n_actions_; ++u) {
      for (State x = 0; x < n_states_; ++x) {
        double out = 0.0;
        for (State y = 0; y < n_states_; ++y) {
          if (y == x) continue;
          const double r = rate_(x, y, u, nu);
          m.rate(u, x, y) = r;
          out += r;
        }
        m.rate(u, x, x) = -out;
      }
    }
    for (State x = 0; x < n_states_; ++x)
      for (Action u = 0; u < n_actions_; ++u) m.reward(x, u) = reward_(x, u, nu);
  }

  // Throws if some off-diagonal rate is negative at `nu`.
  void check_rates(std::span<const double> nu) const {
    for (Action u = 0; u < n_actions_; ++u)
      for (State x = 0; x < n_states_; ++x)
        for (State y = 0; y < n_states_; ++y)
          if (x != y && !(rate_(x, y, u, nu) >= 0.0))
            throw InvalidArgument("negative or NaN jump rate from state " + std::to_string(x) +
                                  " to " + std::to_string(y) + " under action " +
                                  std::to_string(u));
  }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  double horizon_;
  RateFunction rate_;
  RewardFunction reward_;
  TerminalFunction terminal_;
  std::vector<double> mu0_;
};

// Uniform grid t_k = k * dt on [0, horizon].
class TimeGrid {
 public:
  TimeGrid(double horizon, double dt) : horizon_(horizon), dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw InvalidArgument("time grid needs a positive horizon");
    const double steps = std::round(horizon / dt);
    if (steps < 1.0 || std::abs(steps * dt - horizon) > 1e-9)
      throw InvalidArgument("horizon " + std::to_string(horizon) +
                            " is not an integer multiple of dt " + std::to_string(dt));
    n_steps_ = static_cast<std::size_t>(steps);
  }

  double dt() const { return dt_; }
  double horizon() const { return horizon_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_nodes() const { return n_steps_ + 1; }
  double node(std::size_t k) const { return k == n_steps_ ? horizon_ : static_cast<double>(k) * dt_; }

 private:
  double horizon_;
  double dt_;
  std::size_t n_steps_ = 0;
};

namespace detail {

// Row-major dense table with a fixed number of rows, each a contiguous block.
class RowTable {
 public:
  RowTable() = default;
  RowTable(std::size_t rows, std::size_t width, double fill = 0.0)
      : rows_(rows), width_(width), data_(rows * width, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t width() const { return width_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * width_, width_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * width_, width_}; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const RowTable&, const RowTable&) = default;

 protected:
  std::size_t rows_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

}  // namespace detail

// One probability vector over states per grid node.
class MeanFieldFlow : public detail::RowTable {
 public:
  MeanFieldFlow() = default;
  MeanFieldFlow(std::size_t n_nodes, std::size_t n_states) : RowTable(n_nodes, n_states) {}

  std::size_t n_nodes() const { return rows_; }
  std::size_t n_states() const { return width_; }
  std::span<const double> at(std::size_t node) const { return row(node); }
  std::span<double> at(std::size_t node) { return row(node); }
  double at(std::size_t node, State x) const { return data_[node * width_ + x]; }
  double& at(std::size_t node, State x) { return data_[node * width_ + x]; }
};

// Per-node state values.
class ValueTable : public detail::RowTable {
 public:
  ValueTable() = default;
  ValueTable(std::size_t n_nodes, std::size_t n_states) : RowTable(n_nodes, n_states) {}

  std::size_t n_nodes() const { return rows_; }
  std::size_t n_states() const { return width_; }
  std::span<const double> at(std::size_t node) const { return row(node); }
  std::span<double> at(std::size_t node) { return row(node); }
  double at(std::size_t node, State x) const { return data_[node * width_ + x]; }
  double& at(std::size_t node, State x) { return data_[node * width_ + x]; }
};

// Per-node state-action values.
class QTable : public detail::RowTable {
 public:
  QTable() = default;
  QTable(std::size_t n_nodes, std::size_t n_states, std::size_t n_actions)
      : RowTable(n_nodes * n_states, n_actions), n_nodes_(n_nodes), n_states_(n_states) {}

  std::size_t n_nodes() const { return n_nodes_; }
  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return width_; }
  std::span<const double> at(std::size_t node, State x) const { return row(node * n_states_ + x); }
  std::span<double> at(std::size_t node, State x) { return row(node * n_states_ + x); }
  double at(std::size_t node, State x, Action u) const {
    return data_[(node * n_states_ + x) * width_ + u];
  }
  double& at(std::size_t node, State x, Action u) {
    return data_[(node * n_states_ + x) * width_ + u];
  }

 private:
  std::size_t n_nodes_ = 0;
  std::size_t n_states_ = 0;
};

// Action distributions per (interval, state), constant on [t_k, t_{k+1}).
class Policy : public detail::RowTable {
 public:
  Policy() = default;
  Policy(std::size_t n_intervals, std::size_t n_states, std::size_t n_actions)
      : RowTable(n_intervals * n_states, n_actions), n_intervals_(n_intervals), n_states_(n_states) {}

  std::size_t n_intervals() const { return n_intervals_; }
  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return width_; }
  std::span<const double> at(std::size_t k, State x) const { return row(k * n_states_ + x); }
  std::span<double> at(std::size_t k, State x) { return row(k * n_states_ + x); }
  double at(std::size_t k, State x, Action u) const {
    return data_[(k * n_states_ + x) * width_ + u];
  }
  double& at(std::size_t k, State x, Action u) { return data_[(k * n_states_ + x) * width_ + u]; }

  bool is_normalized(double tol = kSimplexTolerance) const {
    for (std::size_t r = 0; r < rows_; ++r)
      if (!is_probability_vector(row(r), tol)) return false;
    return true;
  }

 private:
  std::size_t n_intervals_ = 0;
  std::size_t n_states_ = 0;
};

struct SolverConfig {
  double alpha = 1.0;
  double beta = 0.5;
  std::size_t max_iters = 100;
  double policy_tol = 1e-8;
  double dt = 0.01;
  // Adds an unregularized best-response pass per iteration to fill in the Nash gap.
  bool record_nash_gap = true;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in (0, 1)");
    if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
    if (!(policy_tol >= 0.0)) throw InvalidArgument("policy_tol must be nonnegative");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  }
};

inline Policy uniform_policy(const TimeGrid& grid, std::size_t n_states, std::size_t n_actions) {
  if (n_actions == 0) throw InvalidArgument("uniform policy needs at least one action");
  Policy pi(grid.n_steps(), n_states, n_actions);
  const double p = 1.0 / static_cast<double>(n_actions);
  for (std::size_t r = 0; r < pi.rows(); ++r) std::ranges::fill(pi.row(r), p);
  return pi;
}

// Shannon entropy with 0 log 0 = 0.
inline double entropy(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace ctmfg
