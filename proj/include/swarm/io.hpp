#pragma once

// Plain-text outputs. All reals are printed with 17 significant digits so
// that reading a file back reproduces the in-memory doubles exactly.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "swarm/config.hpp"
#include "swarm/diagnostics.hpp"
#include "swarm/state.hpp"

namespace swarm {

inline constexpr const char* kSnapshotHeader = "x,Q,M,N,E,H,G";
inline constexpr const char* kSpacetimeHeader = "t,x,E";
inline constexpr const char* kLedgerHeader =
    "step,B,division_source,elongation_growth,boundary_outflux,residual,relative_residual,cfl,"
    "water_clamps";
inline constexpr const char* kFrontHeader = "step,t,front";
inline constexpr const char* kPhaseHeader = "kind,start_step,end_step,t_start,t_end";
inline constexpr const char* kConvergenceHeader = "dt_a,dt_b,t,l2_diff";

inline std::string format_real(double v) { return detail::fmt(v); }

inline double cell_center(std::size_t i, double dx) {
  return (static_cast<double>(i) + 0.5) * dx;
}

/// One snapshot as text: header then one row per cell.
inline std::string format_snapshot(const ColonyState& s, const DerivedFields& d, double dx) {
  std::string out = kSnapshotHeader;
  out += '\n';
  for (std::size_t i = 0; i < s.n_cells(); ++i) {
    out += format_real(cell_center(i, dx)) + ',' + format_real(s.q[i]) + ',' +
           format_real(d.m[i]) + ',' + format_real(d.n_swarm[i]) + ',' + format_real(d.e[i]) +
           ',' + format_real(s.h_conc[i]) + ',' + format_real(s.g[i]) + '\n';
  }
  return out;
}

struct Snapshot {
  std::vector<double> x, q, m, n_swarm, e, h, g;
};

inline Snapshot parse_snapshot(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSnapshotHeader)
    throw InvalidArgument("snapshot", "missing header");
  Snapshot s;
  std::vector<double>* cols[] = {&s.x, &s.q, &s.m, &s.n_swarm, &s.e, &s.h, &s.g};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < 7; ++c) {
      const std::size_t next = c < 6 ? line.find(',', pos) : line.size();
      if (next == std::string::npos) throw InvalidArgument("snapshot", "short row");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + next, v);
      if (ec != std::errc() || ptr != line.data() + next)
        throw InvalidArgument("snapshot", "bad number in row");
      cols[c]->push_back(v);
      pos = next + 1;
    }
  }
  return s;
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("snapshot", "cannot open " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_snapshot(buf.str());
}

inline std::string format_spacetime_rows(double t, std::span<const double> e, double dx) {
  std::string out;
  for (std::size_t i = 0; i < e.size(); ++i)
    out += format_real(t) + ',' + format_real(cell_center(i, dx)) + ',' + format_real(e[i]) + '\n';
  return out;
}

inline std::string format_ledger_row(std::size_t step, const BiomassLedger& l,
                                     const StepReport& r) {
  return std::to_string(step) + ',' + format_real(l.b_total) + ',' +
         format_real(l.division_source) + ',' + format_real(l.elongation_growth) + ',' +
         format_real(l.boundary_outflux) + ',' + format_real(l.residual) + ',' +
         format_real(l.relative_residual) + ',' + format_real(r.cfl_number) + ',' +
         std::to_string(r.negative_water_clamps) + '\n';
}

inline std::string format_phases(const PhaseTrace& trace, double dt) {
  std::string out = kPhaseHeader;
  out += '\n';
  for (const auto& ph : trace.phases)
    out += std::string(to_string(ph.kind)) + ',' + std::to_string(ph.start) + ',' +
           std::to_string(ph.end) + ',' + format_real(static_cast<double>(ph.start) * dt) + ',' +
           format_real(static_cast<double>(ph.end) * dt) + '\n';
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

inline std::string snapshot_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%06zu.csv", step);
  return buf;
}

}  // namespace swarm
