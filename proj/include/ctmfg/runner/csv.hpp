#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ctmfg/errors.hpp"
#include "ctmfg/metrics.hpp"
#include "ctmfg/model.hpp"

// Plot-ready CSV files: iteration traces, mean field flows and policies.
//
// Floating point values are written in the shortest form that parses back to
// the identical double (never more than 17 significant digits), so every file
// round-trips exactly and identical runs produce identical bytes.
namespace ctmfg::runner {

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content.
class ParseError : public Error {
 public:
  using Error::Error;
};

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::size_t parse_index(std::string_view s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not an index: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline constexpr std::string_view kTraceHeader =
    "k,delta_j,delta_j_re,policy_delta,mean_field_delta,objective";
inline constexpr std::string_view kPolicyHeader = "k,x,u,prob";

inline void write_trace(std::ostream& os, const IterationTrace& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace)
    os << r.k << ',' << format_double(r.delta_j) << ',' << format_double(r.delta_j_re) << ','
       << format_double(r.policy_delta) << ',' << format_double(r.mean_field_delta) << ','
       << format_double(r.objective) << '\n';
}

inline IterationTrace read_trace(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kTraceHeader)
    throw ParseError("trace file does not start with the expected header");
  IterationTrace trace;
  while (std::getline(is, line)) {
    const auto row = strip_cr(line);
    if (row.empty()) continue;
    const auto f = split_fields(row);
    if (f.size() != 6) throw ParseError("trace row needs 6 fields: '" + line + "'");
    IterationRecord r;
    r.k = parse_index(f[0]);
    r.delta_j = parse_double(f[1]);
    r.delta_j_re = parse_double(f[2]);
    r.policy_delta = parse_double(f[3]);
    r.mean_field_delta = parse_double(f[4]);
    r.objective = parse_double(f[5]);
    trace.push_back(r);
  }
  return trace;
}

inline void write_flow(std::ostream& os, const MeanFieldFlow& flow, const TimeGrid& grid) {
  if (flow.n_nodes() != grid.n_nodes()) throw DimensionMismatch("flow does not match the grid");
  os << 't';
  for (std::size_t x = 0; x < flow.n_states(); ++x) os << ",state_" << x;
  os << '\n';
  for (std::size_t k = 0; k < flow.n_nodes(); ++k) {
    os << format_double(grid.node(k));
    for (std::size_t x = 0; x < flow.n_states(); ++x) os << ',' << format_double(flow.at(k, x));
    os << '\n';
  }
}

inline void write_policy(std::ostream& os, const Policy& pi) {
  os << kPolicyHeader << '\n';
  for (std::size_t k = 0; k < pi.n_intervals(); ++k)
    for (std::size_t x = 0; x < pi.n_states(); ++x)
      for (std::size_t u = 0; u < pi.n_actions(); ++u)
        os << k << ',' << x << ',' << u << ',' << format_double(pi.at(k, x, u)) << '\n';
}

// Reads a policy of the given shape. Every (k, x, u) entry must appear exactly once.
inline Policy read_policy(std::istream& is, std::size_t n_intervals, std::size_t n_states,
                          std::size_t n_actions) {
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kPolicyHeader)
    throw ParseError("policy file does not start with the header 'k,x,u,prob'");
  Policy pi(n_intervals, n_states, n_actions);
  std::vector<char> seen(n_intervals * n_states * n_actions, 0);
  std::size_t count = 0;
  while (std::getline(is, line)) {
    const auto row = strip_cr(line);
    if (row.empty()) continue;
    const auto f = split_fields(row);
    if (f.size() != 4) throw ParseError("policy row needs 4 fields: '" + line + "'");
    const std::size_t k = parse_index(f[0]);
    const std::size_t x = parse_index(f[1]);
    const std::size_t u = parse_index(f[2]);
    if (k >= n_intervals || x >= n_states || u >= n_actions)
      throw DimensionMismatch("policy entry out of range: '" + line + "'");
    const std::size_t idx = (k * n_states + x) * n_actions + u;
    if (seen[idx]) throw ParseError("duplicate policy entry: '" + line + "'");
    seen[idx] = 1;
    ++count;
    pi.at(k, x, u) = parse_double(f[3]);
  }
  if (count != seen.size())
    throw DimensionMismatch("policy file has " + std::to_string(count) + " entries, expected " +
                            std::to_string(seen.size()));
  if (!pi.is_normalized(1e-9)) throw ParseError("policy rows must be probability vectors");
  return pi;
}

// Writes `content` produced by `fill(stream)` to `path`.
template <typename Fill>
void write_file(const std::string& path, Fill&& fill) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  fill(os);
  os.flush();
  if (!os) throw IoError("failed writing '" + path + "'");
}

inline void emit_trace(const IterationTrace& trace, const std::string& path) {
  write_file(path, [&](std::ostream& os) { write_trace(os, trace); });
}

inline void emit_flow(const MeanFieldFlow& flow, const TimeGrid& grid, const std::string& path) {
  write_file(path, [&](std::ostream& os) { write_flow(os, flow, grid); });
}

inline void emit_policy(const Policy& pi, const std::string& path) {
  write_file(path, [&](std::ostream& os) { write_policy(os, pi); });
}

inline IterationTrace load_trace(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_trace(is);
}

inline Policy load_policy(const std::string& path, std::size_t n_intervals, std::size_t n_states,
                          std::size_t n_actions) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_policy(is, n_intervals, n_states, n_actions);
}

}  // namespace ctmfg::runner
