#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ctmfg/errors.hpp"
#include "ctmfg/model.hpp"

// The bundled benchmark games.
namespace ctmfg::games {

// Left-right: states {L, R}, actions {Stay, Change}.
namespace left_right {
inline constexpr State kLeft = 0;
inline constexpr State kRight = 1;
inline constexpr Action kStay = 0;
inline constexpr Action kChange = 1;
inline constexpr double kSwitchRate = 0.2;
inline constexpr double kHorizon = 50.0;
}  // namespace left_right

// SIS epidemic: states {S, I}, actions {NoQuarantine, Quarantine}.
namespace sis {
inline constexpr State kSusceptible = 0;
inline constexpr State kInfected = 1;
inline constexpr Action kNoQuarantine = 0;
inline constexpr Action kQuarantine = 1;
inline constexpr double kHealingRate = 0.2;
inline constexpr double kInfectionRate = 5.0;
inline constexpr double kInfectionCost = 10.0;
inline constexpr double kQuarantineCost = 2.0;
inline constexpr double kFinalInfectionCost = 35.0;
inline constexpr double kHorizon = 10.0;
inline constexpr double kInitialInfected = 0.01;
}  // namespace sis

inline GameModel build_left_right() {
  using namespace left_right;
  auto rate = [](State from, State to, Action u, std::span<const double>) {
    return (from != to && u == kChange) ? kSwitchRate : 0.0;
  };
  // Crowding penalty, twice as steep on the left; independent of the action.
  auto reward = [](State x, Action, std::span<const double> nu) {
    return x == kLeft ? -2.0 * nu[kLeft] : -nu[kRight];
  };
  return GameModel(2, 2, kHorizon, rate, reward, [](State) { return 0.0; }, {0.4, 0.6});
}

inline GameModel build_sis() {
  using namespace sis;
  auto rate = [](State from, State to, Action u, std::span<const double> nu) {
    if (from == kSusceptible && to == kInfected)
      return u == kNoQuarantine ? kInfectionRate * nu[kInfected] : 0.0;
    return kHealingRate;
  };
  auto reward = [](State x, Action u, std::span<const double>) {
    if (u == kQuarantine) return -kInfectionCost - kQuarantineCost;
    return x == kInfected ? -kInfectionCost : 0.0;
  };
  auto terminal = [](State x) { return x == kInfected ? -kFinalInfectionCost : 0.0; };
  return GameModel(2, 2, kHorizon, rate, reward, terminal,
                   {1.0 - kInitialInfected, kInitialInfected});
}

struct RandomGameSpec {
  std::uint64_t seed = 0;
  std::size_t n_states = 10;
  std::size_t n_actions = 2;
  double horizon = 10.0;
  double eta = 1.0;          // weight of the -log mu(x) crowd-aversion term
  double epsilon_log = 1e-10;  // floor applied to mu(x) inside the log

  void validate() const {
    if (n_states < 1 || n_actions < 1) throw InvalidArgument("random game needs states and actions");
    if (!(horizon > 0.0)) throw InvalidArgument("random game horizon must be positive");
    if (!(eta >= 0.0)) throw InvalidArgument("eta must be nonnegative");
    if (!(epsilon_log > 0.0)) throw InvalidArgument("epsilon_log must be positive");
  }
};

// Raw draws of a random game. rates[(x * n_states + y) * n_actions + u] with
// zeros on the diagonal; base_rewards[x * n_actions + u].
struct RandomGameTables {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> rates;
  std::vector<double> base_rewards;

  double rate(State x, State y, Action u) const { return rates[(x * n_states + y) * n_actions + u]; }
  double base_reward(State x, Action u) const { return base_rewards[x * n_actions + u]; }
};

// Uniform [0, 1) double from the top 53 bits of one mt19937_64 output. Both
// the engine and this conversion are fully specified, so tables are
// reproducible across platforms (std::uniform_real_distribution is not).
inline double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Draw order: rates row-major over (x, y != x, u), then rewards over (x, u).
inline RandomGameTables draw_random_tables(const RandomGameSpec& spec) {
  spec.validate();
  std::mt19937_64 engine(spec.seed);
  RandomGameTables t;
  t.n_states = spec.n_states;
  t.n_actions = spec.n_actions;
  t.rates.assign(spec.n_states * spec.n_states * spec.n_actions, 0.0);
  for (State x = 0; x < spec.n_states; ++x)
    for (State y = 0; y < spec.n_states; ++y) {
      if (y == x) continue;
      for (Action u = 0; u < spec.n_actions; ++u)
        t.rates[(x * spec.n_states + y) * spec.n_actions + u] = unit_uniform(engine);
    }
  t.base_rewards.resize(spec.n_states * spec.n_actions);
  for (double& r : t.base_rewards) r = unit_uniform(engine);
  return t;
}

inline GameModel build_random_mfg(const RandomGameSpec& spec) {
  auto tables = std::make_shared<const RandomGameTables>(draw_random_tables(spec));
  auto rate = [tables](State from, State to, Action u, std::span<const double>) {
    return tables->rate(from, to, u);
  };
  const double eta = spec.eta;
  const double floor = spec.epsilon_log;
  auto reward = [tables, eta, floor](State x, Action u, std::span<const double> nu) {
    const double base = tables->base_reward(x, u);
    return eta == 0.0 ? base : base - eta * std::log(std::max(nu[x], floor));
  };
  std::vector<double> mu0(spec.n_states, 1.0 / static_cast<double>(spec.n_states));
  return GameModel(spec.n_states, spec.n_actions, spec.horizon, rate, reward,
                   [](State) { return 0.0; }, std::move(mu0));
}

// Time average of the infected share, trapezoidal over the grid nodes.
inline double mean_infected_fraction(const MeanFieldFlow& flow, const TimeGrid& grid) {
  if (flow.n_nodes() != grid.n_nodes() || flow.n_states() != 2)
    throw DimensionMismatch("expected a two-state SIS flow on this grid");
  double area = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k)
    area += 0.5 * (flow.at(k, sis::kInfected) + flow.at(k + 1, sis::kInfected)) *
            (grid.node(k + 1) - grid.node(k));
  return area / grid.horizon();
}

}  // namespace ctmfg::games
