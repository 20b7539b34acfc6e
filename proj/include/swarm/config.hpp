#pragma once

// Run configuration: flat `key = value` text with dotted section prefixes,
// `#` comments, and an optional `preset = simN` line that seeds every value
// before the remaining keys override it.
//
//   preset = sim2
//   grid.dt = 0.025
//   init.q0.segments = 0:0.6:0.7        # lo:hi:value, ';'-separated
//   scheme.transport_sign = -1

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "swarm/model.hpp"
#include "swarm/scheme.hpp"
#include "swarm/state.hpp"

namespace swarm {

struct OutputOptions {
  std::size_t snapshot_every = 1;
  std::string dir = "out";
  bool snapshots = true;
  bool spacetime = true;
  bool ledger = true;
  bool phases = true;

  bool operator==(const OutputOptions&) const = default;
};

struct DiagnosticOptions {
  double front_threshold = 1e-3;
  double terrace_prominence = 0.05;
  double phase_tolerance = 0.075;   // front displacement still counted as stationary
  double phase_min_duration = 2.0;  // time units

  bool operator==(const DiagnosticOptions&) const = default;
};

struct RunConfig {
  std::string preset;  // empty when built from scratch
  ModelParams params;
  GridSpec grid;
  std::vector<Segment> q0;
  double h0 = 0.0;
  double g0 = 1.0;
  OutputOptions outputs;
  SchemeOptions scheme;
  DiagnosticOptions diagnostics;

  InitialConditions initial_conditions() const {
    InitialConditions ic;
    ic.q0 = q0;
    ic.h0 = h0;
    ic.g0 = g0;
    return ic;
  }
  double horizon() const { return static_cast<double>(grid.n_steps) * grid.dt; }

  bool operator==(const RunConfig&) const = default;
};

inline void validate(const RunConfig& c) {
  validate(c.params);
  validate(c.grid, c.params);
  for (const auto& s : c.q0)
    if (!(s.value >= 0.0) || !(s.x_hi >= s.x_lo) || !std::isfinite(s.value))
      throw InvalidArgument("init.q0.segments", "segments need lo <= hi and a value >= 0");
  if (!(c.h0 >= 0.0 && c.h0 <= 1.0)) throw InvalidArgument("init.h0", "must lie in [0,1]");
  if (!(c.g0 >= 0.0 && c.g0 <= 1.0)) throw InvalidArgument("init.g0", "must lie in [0,1]");
  if (c.outputs.snapshot_every < 1)
    throw InvalidArgument("output.snapshot_every", "must be >= 1");
  if (c.scheme.transport_sign != 1 && c.scheme.transport_sign != -1)
    throw InvalidArgument("scheme.transport_sign", "must be -1 or +1");
  if (!(c.diagnostics.front_threshold > 0.0))
    throw InvalidArgument("diagnostics.front_threshold", "must be > 0");
  if (!(c.diagnostics.terrace_prominence > 0.0))
    throw InvalidArgument("diagnostics.terrace_prominence", "must be > 0");
  if (!(c.diagnostics.phase_tolerance >= 0.0))
    throw InvalidArgument("diagnostics.phase_tolerance", "must be >= 0");
  if (!(c.diagnostics.phase_min_duration >= 0.0))
    throw InvalidArgument("diagnostics.phase_min_duration", "must be >= 0");
}

/// Re-sizes cohort capacities and cell count after params or steps changed.
inline void resize_grid(RunConfig& c) {
  c.grid.n_cells = static_cast<std::size_t>(std::llround(c.params.x_max / c.grid.dx));
  c.grid.k_max = min_k_max(c.params, c.grid.age_step());
  c.grid.p_max = min_p_max(c.params, c.grid.k_max, c.grid.age_step());
}

// ---------------------------------------------------------------------------
// Presets

inline RunConfig preset(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  ModelParams& p = c.params;
  p.tau = 1.0;
  p.e_bar = 1.0;
  p.c_max = 0.2;
  p.h_crit = 0.5;
  const double dx = 0.15;
  if (name == "sim1") {
    p.xi = 0.1; p.q_bar = 0.2; p.gamma_t = 0.5; p.gamma_d = 0.9; p.eta = 0.5;
    p.a_w = 1.0; p.a_d = 3.5; p.kappa = 2.0; p.alpha = 0.3; p.alpha_prime = 0.28;
    p.x_max = 1.65;  // eleven cells of 0.15
    c.grid = make_grid(p, 0.01, dx, 2500);
    c.q0 = {{0.0, 0.6, 0.1}};
    c.h0 = 0.7;
    c.outputs.snapshot_every = 1;
  } else if (name == "sim2") {
    p.xi = 0.007; p.q_bar = 0.05; p.gamma_t = 0.03; p.gamma_d = 0.07; p.eta = 0.3;
    p.a_w = 1.0; p.a_d = 6.3; p.kappa = 2.5; p.alpha = 0.02; p.alpha_prime = 0.0194;
    p.x_max = 4.5;
    c.grid = make_grid(p, 0.05, dx, 3000);
    c.q0 = {{0.0, 0.6, 0.7}};
    c.h0 = 0.0;
    c.outputs.snapshot_every = 20;
  } else if (name == "sim3") {
    p.xi = 0.008; p.q_bar = 0.05; p.gamma_t = 0.37; p.gamma_d = 0.13; p.eta = 0.3;
    p.a_w = 1.2; p.a_d = 5.5; p.kappa = 2.5; p.alpha = 0.42; p.alpha_prime = 0.41;
    p.x_max = 4.5;
    c.grid = make_grid(p, 0.05, dx, 4400);
    c.q0 = {{0.0, 0.6, 0.2}};
    c.h0 = 0.8;
    c.outputs.snapshot_every = 20;
  } else {
    throw InvalidArgument("preset", "unknown preset '" + std::string(name) + "'");
  }
  c.g0 = 1.0;
  c.diagnostics.phase_tolerance = 0.5 * dx;
  return c;
}

// ---------------------------------------------------------------------------
// Text form

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    throw InvalidArgument(key, "expected a number, got '" + std::string(v) + "'");
  return out;
}

inline std::size_t parse_size(const std::string& key, std::string_view v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    throw InvalidArgument(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

inline int parse_int(const std::string& key, std::string_view v) {
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  int out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    throw InvalidArgument(key, "expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument(key, "expected true or false");
}

inline std::vector<Segment> parse_segments(const std::string& key, std::string_view v) {
  std::vector<Segment> out;
  std::string text(v);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto a = item.find(':');
    const auto b = item.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw InvalidArgument(key, "segments are written lo:hi:value");
    out.push_back({parse_double(key, trim(item.substr(0, a))),
                   parse_double(key, trim(item.substr(a + 1, b - a - 1))),
                   parse_double(key, trim(item.substr(b + 1)))});
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses configuration text. Every key is checked; unknown keys, duplicates
/// and invariant violations raise InvalidArgument naming the key.
inline RunConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("line " + std::to_string(line_no), "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!kv.emplace(key, value).second) throw InvalidArgument(key, "duplicate key");
    order.push_back(key);
  }

  RunConfig c;
  if (auto it = kv.find("preset"); it != kv.end()) {
    c = preset(it->second);
  } else {
    c.diagnostics.phase_tolerance = 0.5 * c.grid.dx;
  }

  bool explicit_cells = false, explicit_k = false, explicit_p = false;
  std::size_t n_cells = 0, k_max = 0, p_max = 0;

  using Setter = void (*)(RunConfig&, const std::string&, const std::string&);
  static const std::map<std::string, Setter> setters = [] {
    std::map<std::string, Setter> m;
#define SWARM_PARAM(name) \
  m["params." #name] = [](RunConfig& c, const std::string& k, const std::string& v) { \
    c.params.name = detail::parse_double(k, v);                                     \
  };
    SWARM_PARAM(xi) SWARM_PARAM(tau) SWARM_PARAM(e_bar) SWARM_PARAM(q_bar)
    SWARM_PARAM(gamma_t) SWARM_PARAM(gamma_d) SWARM_PARAM(eta) SWARM_PARAM(a_w)
    SWARM_PARAM(a_d) SWARM_PARAM(kappa) SWARM_PARAM(alpha) SWARM_PARAM(alpha_prime)
    SWARM_PARAM(c_max) SWARM_PARAM(h_crit) SWARM_PARAM(x_max)
#undef SWARM_PARAM
    m["grid.dt"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.grid.dt = detail::parse_double(k, v);
    };
    m["grid.dx"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.grid.dx = detail::parse_double(k, v);
    };
    m["grid.n_steps"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.grid.n_steps = detail::parse_size(k, v);
    };
    m["grid.nu"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.grid.nu = detail::parse_size(k, v);
    };
    m["init.q0.segments"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.q0 = detail::parse_segments(k, v);
    };
    m["init.h0"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.h0 = detail::parse_double(k, v);
    };
    m["init.g0"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.g0 = detail::parse_double(k, v);
    };
    m["output.snapshot_every"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.outputs.snapshot_every = detail::parse_size(k, v);
    };
    m["output.dir"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.outputs.dir = v;
    };
    m["output.snapshots"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.outputs.snapshots = detail::parse_bool(k, v);
    };
    m["output.spacetime"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.outputs.spacetime = detail::parse_bool(k, v);
    };
    m["output.ledger"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.outputs.ledger = detail::parse_bool(k, v);
    };
    m["output.phases"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.outputs.phases = detail::parse_bool(k, v);
    };
    m["scheme.transport_sign"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.scheme.transport_sign = detail::parse_int(k, v);
    };
    m["scheme.dedifferentiation"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "full")
        c.scheme.feed = DedifferentiationFeed::full;
      else if (v == "scaled_by_dt")
        c.scheme.feed = DedifferentiationFeed::scaled_by_dt;
      else
        throw InvalidArgument(k, "expected full or scaled_by_dt");
    };
    m["diagnostics.front_threshold"] = [](RunConfig& c, const std::string& k,
                                          const std::string& v) {
      c.diagnostics.front_threshold = detail::parse_double(k, v);
    };
    m["diagnostics.terrace_prominence"] = [](RunConfig& c, const std::string& k,
                                             const std::string& v) {
      c.diagnostics.terrace_prominence = detail::parse_double(k, v);
    };
    m["diagnostics.phase_tolerance"] = [](RunConfig& c, const std::string& k,
                                          const std::string& v) {
      c.diagnostics.phase_tolerance = detail::parse_double(k, v);
    };
    m["diagnostics.phase_min_duration"] = [](RunConfig& c, const std::string& k,
                                             const std::string& v) {
      c.diagnostics.phase_min_duration = detail::parse_double(k, v);
    };
    return m;
  }();

  for (const auto& key : order) {
    const std::string& value = kv.at(key);
    if (key == "preset") continue;
    if (key == "grid.n_cells") {
      n_cells = detail::parse_size(key, value);
      explicit_cells = true;
    } else if (key == "grid.k_max") {
      k_max = detail::parse_size(key, value);
      explicit_k = true;
    } else if (key == "grid.p_max") {
      p_max = detail::parse_size(key, value);
      explicit_p = true;
    } else if (auto it = setters.find(key); it != setters.end()) {
      it->second(c, key, value);
    } else {
      throw InvalidArgument(key, "unknown key");
    }
  }

  validate(c.params);
  if (!(c.grid.dx > 0.0)) throw InvalidArgument("grid.dx", "must be > 0");
  if (!(c.grid.dt > 0.0)) throw InvalidArgument("grid.dt", "must be > 0");
  if (c.grid.nu == 0) throw InvalidArgument("grid.nu", "must be >= 1");
  resize_grid(c);
  if (explicit_cells) c.grid.n_cells = n_cells;
  if (explicit_k) c.grid.k_max = k_max;
  if (explicit_p) c.grid.p_max = p_max;
  validate(c);
  return c;
}

/// Full text form of a configuration; every resolved value is written.
inline std::string write_config(const RunConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  if (!c.preset.empty()) o << "preset = " << c.preset << "\n";
  const ModelParams& p = c.params;
  o << "params.xi = " << fmt(p.xi) << "\n"
    << "params.tau = " << fmt(p.tau) << "\n"
    << "params.e_bar = " << fmt(p.e_bar) << "\n"
    << "params.q_bar = " << fmt(p.q_bar) << "\n"
    << "params.gamma_t = " << fmt(p.gamma_t) << "\n"
    << "params.gamma_d = " << fmt(p.gamma_d) << "\n"
    << "params.eta = " << fmt(p.eta) << "\n"
    << "params.a_w = " << fmt(p.a_w) << "\n"
    << "params.a_d = " << fmt(p.a_d) << "\n"
    << "params.kappa = " << fmt(p.kappa) << "\n"
    << "params.alpha = " << fmt(p.alpha) << "\n"
    << "params.alpha_prime = " << fmt(p.alpha_prime) << "\n"
    << "params.c_max = " << fmt(p.c_max) << "\n"
    << "params.h_crit = " << fmt(p.h_crit) << "\n"
    << "params.x_max = " << fmt(p.x_max) << "\n";
  o << "grid.dt = " << fmt(c.grid.dt) << "\n"
    << "grid.dx = " << fmt(c.grid.dx) << "\n"
    << "grid.n_cells = " << c.grid.n_cells << "\n"
    << "grid.n_steps = " << c.grid.n_steps << "\n"
    << "grid.nu = " << c.grid.nu << "\n"
    << "grid.k_max = " << c.grid.k_max << "\n"
    << "grid.p_max = " << c.grid.p_max << "\n";
  o << "init.q0.segments = ";
  for (std::size_t j = 0; j < c.q0.size(); ++j)
    o << (j ? ";" : "") << fmt(c.q0[j].x_lo) << ":" << fmt(c.q0[j].x_hi) << ":"
      << fmt(c.q0[j].value);
  o << "\n"
    << "init.h0 = " << fmt(c.h0) << "\n"
    << "init.g0 = " << fmt(c.g0) << "\n";
  o << "output.snapshot_every = " << c.outputs.snapshot_every << "\n"
    << "output.dir = " << c.outputs.dir << "\n"
    << "output.snapshots = " << (c.outputs.snapshots ? "true" : "false") << "\n"
    << "output.spacetime = " << (c.outputs.spacetime ? "true" : "false") << "\n"
    << "output.ledger = " << (c.outputs.ledger ? "true" : "false") << "\n"
    << "output.phases = " << (c.outputs.phases ? "true" : "false") << "\n";
  o << "scheme.transport_sign = " << c.scheme.transport_sign << "\n"
    << "scheme.dedifferentiation = "
    << (c.scheme.feed == DedifferentiationFeed::full ? "full" : "scaled_by_dt") << "\n";
  o << "diagnostics.front_threshold = " << fmt(c.diagnostics.front_threshold) << "\n"
    << "diagnostics.terrace_prominence = " << fmt(c.diagnostics.terrace_prominence) << "\n"
    << "diagnostics.phase_tolerance = " << fmt(c.diagnostics.phase_tolerance) << "\n"
    << "diagnostics.phase_min_duration = " << fmt(c.diagnostics.phase_min_duration) << "\n";
  return o.str();
}

/// `source` is a preset name (sim1, sim2, sim3) or a path to a config file.
inline RunConfig load_config(const std::string& source) {
  if (source == "sim1" || source == "sim2" || source == "sim3") {
    RunConfig c = preset(source);
    validate(c);
    return c;
  }
  std::ifstream f(source);
  if (!f) throw InvalidArgument("config", "cannot open '" + source + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

}  // namespace swarm
