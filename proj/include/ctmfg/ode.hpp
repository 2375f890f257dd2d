#pragma once

#include <cstddef>
#include <functional>
#include <type_traits>
#include <vector>

#include "ctmfg/errors.hpp"
#include "ctmfg/model.hpp"

// Fixed-step classical Runge-Kutta integration on a TimeGrid.
namespace ctmfg::ode {

using Vector = std::vector<double>;

// Right-hand side y' = f(t, y).
using VectorField = std::function<Vector(double t, const Vector& y)>;

// Right-hand side that also sees the index of the grid interval being
// integrated, so interval-constant inputs (policies) can be looked up without
// guessing at interval boundaries.
using IntervalField = std::function<Vector(std::size_t interval, double t, const Vector& y)>;

enum class Direction { forward, backward };

namespace detail {

inline void axpy(Vector& out, const Vector& y, double a, const Vector& k) {
  out.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * k[i];
}

inline void check_dim(const Vector& k, std::size_t n) {
  if (k.size() != n) throw DimensionMismatch("vector field changed the state dimension");
}

}  // namespace detail

// One RK4 step of size h from (t, y). Negative h steps backward in time.
template <typename F>
Vector rk4_step(F&& f, double t, const Vector& y, double h) {
  const std::size_t n = y.size();
  Vector tmp;
  const Vector k1 = f(t, y);
  detail::check_dim(k1, n);
  detail::axpy(tmp, y, 0.5 * h, k1);
  const Vector k2 = f(t + 0.5 * h, tmp);
  detail::check_dim(k2, n);
  detail::axpy(tmp, y, 0.5 * h, k2);
  const Vector k3 = f(t + 0.5 * h, tmp);
  detail::check_dim(k3, n);
  detail::axpy(tmp, y, h, k3);
  const Vector k4 = f(t + h, tmp);
  detail::check_dim(k4, n);

  Vector out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Integrates over every grid interval and returns the node values.
//
// Forward fills nodes 0..K starting from node 0. Backward fills nodes K..0
// starting from node K; it runs the time-reversed field w(s) = y(T - s)
// forward, so both directions share one stepping loop.
//
// `field` is either (t, y) or (interval, t, y). `after_step(node, y)` may
// modify each freshly computed node value in place (e.g. projection).
template <typename F, typename AfterStep>
std::vector<Vector> integrate_grid(F&& field, const Vector& y_start, const TimeGrid& grid,
                                   Direction direction, AfterStep&& after_step) {
  const std::size_t steps = grid.n_steps();
  const double dt = grid.dt();
  const double horizon = grid.horizon();

  auto eval = [&](std::size_t interval, double t, const Vector& y) -> Vector {
    if constexpr (std::is_invocable_v<F&, std::size_t, double, const Vector&>)
      return field(interval, t, y);
    else
      return field(t, y);
  };

  std::vector<Vector> nodes(grid.n_nodes());
  if (direction == Direction::forward) {
    nodes[0] = y_start;
    for (std::size_t k = 0; k < steps; ++k) {
      auto f = [&](double t, const Vector& y) { return eval(k, t, y); };
      nodes[k + 1] = rk4_step(f, grid.node(k), nodes[k], dt);
      after_step(k + 1, nodes[k + 1]);
    }
  } else {
    nodes[steps] = y_start;
    for (std::size_t j = 0; j < steps; ++j) {
      const std::size_t interval = steps - 1 - j;
      auto reversed = [&](double s, const Vector& w) {
        Vector d = eval(interval, horizon - s, w);
        for (double& v : d) v = -v;
        return d;
      };
      const double s = static_cast<double>(j) * dt;
      nodes[interval] = rk4_step(reversed, s, nodes[interval + 1], dt);
      after_step(interval, nodes[interval]);
    }
  }
  return nodes;
}

template <typename F>
std::vector<Vector> integrate_grid(F&& field, const Vector& y_start, const TimeGrid& grid,
                                   Direction direction) {
  return integrate_grid(std::forward<F>(field), y_start, grid, direction,
                        [](std::size_t, Vector&) {});
}

// Position of time t inside grid interval k as a fraction in [0, 1].
inline double interval_fraction(const TimeGrid& grid, std::size_t k, double t) {
  const double theta = (t - grid.node(k)) / grid.dt();
  return theta < 0.0 ? 0.0 : (theta > 1.0 ? 1.0 : theta);
}

}  // namespace ctmfg::ode
