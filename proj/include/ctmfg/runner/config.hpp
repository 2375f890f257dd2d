#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctmfg/algorithms.hpp"
#include "ctmfg/errors.hpp"
#include "ctmfg/games.hpp"
#include "ctmfg/model.hpp"

// Experiment configuration files.
//
// A config is a YAML document with three sections:
//
//   game:
//     name: left-right | random | sis
//     # random only: seed, n_states, n_actions, horizon, eta, epsilon_log
//   solver:
//     name: fp | fpi | [fp, fpi]
//     alpha: 0.1 | [0.1, 1.0]           # or
//     alpha_sweep: {min: 0.1, max: 10, count: 9}
//     beta: 0.5
//     max_iters: 100
//     policy_tol: 1e-8
//     dt: 0.01
//     record_nash_gap: true
//   output:
//     dir: out
//     flows: true
//     policies: false
//     threads: 0                         # 0 = one per hardware thread
//
// Unknown keys anywhere are rejected.
namespace ctmfg::runner {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GameSelection {
  std::string name = "left-right";
  games::RandomGameSpec random;  // used when name == "random"
};

struct ExperimentConfig {
  GameSelection game;
  std::vector<SolverKind> solvers{SolverKind::fictitious_play};
  std::vector<double> alphas{1.0};
  SolverConfig solver;  // alpha is taken from `alphas`
  std::string out_dir = "out";
  bool write_flows = true;
  bool write_policies = false;
  std::size_t threads = 0;
};

inline GameModel build_game(const GameSelection& g) {
  if (g.name == "left-right") return games::build_left_right();
  if (g.name == "sis") return games::build_sis();
  if (g.name == "random") return games::build_random_mfg(g.random);
  throw ConfigError("unknown game '" + g.name + "'");
}

// Log-spaced temperatures with exact endpoints. Interior points are rounded
// to 12 significant digits so 0.1..10 in three steps gives exactly 1 (the
// value also names output files).
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("alpha_sweep needs 0 < min <= max");
  if (count < 1) throw ConfigError("alpha_sweep.count must be at least 1");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out[i] = std::strtod(buf, nullptr);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace detail {

inline void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!node.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& where) {
  if (!node.IsScalar()) throw ConfigError("'" + where + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + where + "' has an invalid value '" + node.Scalar() + "'");
  }
}

template <typename T>
void read_if(const YAML::Node& section, const char* key, const std::string& where, T& out) {
  if (const auto n = section[key]) out = scalar<T>(n, where + "." + key);
}

inline std::size_t read_count(const YAML::Node& n, const std::string& where) {
  const auto v = scalar<long long>(n, where);
  if (v < 0) throw ConfigError("'" + where + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "fp") return SolverKind::fictitious_play;
  if (s == "fpi") return SolverKind::fixed_point;
  throw ConfigError("unknown solver '" + s + "' (expected fp or fpi)");
}

inline void parse_game(const YAML::Node& node, GameSelection& g) {
  if (!node) throw ConfigError("missing 'game' section");
  if (!node.IsMap()) throw ConfigError("'game' must be a mapping");
  if (!node["name"]) throw ConfigError("missing 'game.name'");
  g.name = scalar<std::string>(node["name"], "game.name");
  if (g.name == "left-right" || g.name == "sis") {
    check_keys(node, {"name"}, "game");
  } else if (g.name == "random") {
    check_keys(node, {"name", "seed", "n_states", "n_actions", "horizon", "eta", "epsilon_log"},
               "game");
    read_if(node, "seed", "game", g.random.seed);
    if (const auto n = node["n_states"]) g.random.n_states = read_count(n, "game.n_states");
    if (const auto n = node["n_actions"]) g.random.n_actions = read_count(n, "game.n_actions");
    read_if(node, "horizon", "game", g.random.horizon);
    read_if(node, "eta", "game", g.random.eta);
    read_if(node, "epsilon_log", "game", g.random.epsilon_log);
    try {
      g.random.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  } else {
    throw ConfigError("unknown game '" + g.name + "' (expected left-right, random or sis)");
  }
}

inline void parse_solver_section(const YAML::Node& node, ExperimentConfig& cfg) {
  if (!node) throw ConfigError("missing 'solver' section");
  check_keys(node,
             {"name", "alpha", "alpha_sweep", "beta", "max_iters", "policy_tol", "dt",
              "record_nash_gap"},
             "solver");
  if (const auto n = node["name"]) {
    cfg.solvers.clear();
    if (n.IsSequence()) {
      for (const auto& s : n) cfg.solvers.push_back(parse_solver(scalar<std::string>(s, "solver.name")));
    } else {
      cfg.solvers.push_back(parse_solver(scalar<std::string>(n, "solver.name")));
    }
    if (cfg.solvers.empty()) throw ConfigError("'solver.name' lists no solver");
  }
  const auto alpha = node["alpha"];
  const auto sweep = node["alpha_sweep"];
  if (alpha && sweep) throw ConfigError("give either 'solver.alpha' or 'solver.alpha_sweep'");
  if (alpha) {
    cfg.alphas.clear();
    if (alpha.IsSequence()) {
      for (const auto& a : alpha) cfg.alphas.push_back(scalar<double>(a, "solver.alpha"));
    } else {
      cfg.alphas.push_back(scalar<double>(alpha, "solver.alpha"));
    }
  } else if (sweep) {
    check_keys(sweep, {"min", "max", "count"}, "solver.alpha_sweep");
    if (!sweep["min"] || !sweep["max"] || !sweep["count"])
      throw ConfigError("'solver.alpha_sweep' needs min, max and count");
    cfg.alphas = log_grid(scalar<double>(sweep["min"], "solver.alpha_sweep.min"),
                          scalar<double>(sweep["max"], "solver.alpha_sweep.max"),
                          read_count(sweep["count"], "solver.alpha_sweep.count"));
  }
  if (cfg.alphas.empty()) throw ConfigError("no temperature given");
  read_if(node, "beta", "solver", cfg.solver.beta);
  if (const auto n = node["max_iters"]) cfg.solver.max_iters = read_count(n, "solver.max_iters");
  read_if(node, "policy_tol", "solver", cfg.solver.policy_tol);
  read_if(node, "dt", "solver", cfg.solver.dt);
  read_if(node, "record_nash_gap", "solver", cfg.solver.record_nash_gap);
}

inline void parse_output(const YAML::Node& node, ExperimentConfig& cfg) {
  if (!node) return;
  check_keys(node, {"dir", "flows", "policies", "threads"}, "output");
  read_if(node, "dir", "output", cfg.out_dir);
  read_if(node, "flows", "output", cfg.write_flows);
  read_if(node, "policies", "output", cfg.write_policies);
  if (const auto n = node["threads"]) cfg.threads = read_count(n, "output.threads");
}

// Sets root[a][b]... = value for a dotted path "a.b...".
inline void set_path(YAML::Node node, const std::vector<std::string>& parts, std::size_t i,
                     const YAML::Node& value) {
  if (i + 1 == parts.size()) {
    node[parts[i]] = value;
    return;
  }
  YAML::Node child = node[parts[i]];
  if (child && !child.IsMap())
    throw ConfigError("override path crosses non-mapping key '" + parts[i] + "'");
  if (!child) {
    node[parts[i]] = YAML::Node(YAML::NodeType::Map);
    child = node[parts[i]];
  }
  set_path(child, parts, i + 1, value);
}

}  // namespace detail

inline ExperimentConfig parse_config(const YAML::Node& root) {
  if (!root || !root.IsMap()) throw ConfigError("config must be a YAML mapping");
  detail::check_keys(root, {"game", "solver", "output"}, "config");
  ExperimentConfig cfg;
  detail::parse_game(root["game"], cfg.game);
  detail::parse_solver_section(root["solver"], cfg);
  detail::parse_output(root["output"], cfg);
  for (double a : cfg.alphas) {
    SolverConfig s = cfg.solver;
    s.alpha = a;
    try {
      s.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  // Grid compatibility is a configuration property; catch it before running.
  try {
    const GameModel game = build_game(cfg.game);
    const TimeGrid grid(game.horizon(), cfg.solver.dt);
    game.check_rates(game.mu0());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

// Applies "dotted.key=value" overrides; values are parsed as YAML.
inline void apply_overrides(YAML::Node& root, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + ov + "' is not of the form key=value");
    std::vector<std::string> parts;
    std::stringstream ss(ov.substr(0, eq));
    for (std::string p; std::getline(ss, p, '.');) {
      if (p.empty()) throw ConfigError("override '" + ov + "' has an empty key segment");
      parts.push_back(p);
    }
    YAML::Node value;
    try {
      value = YAML::Load(ov.substr(eq + 1));
    } catch (const YAML::Exception& e) {
      throw ConfigError("override '" + ov + "': " + e.what());
    }
    detail::set_path(root, parts, 0, value);
  }
}

inline YAML::Node load_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  YAML::Node root = load_yaml(buf.str());
  if (!root.IsMap()) throw ConfigError("config must be a YAML mapping");
  apply_overrides(root, overrides);
  return parse_config(root);
}

}  // namespace ctmfg::runner
