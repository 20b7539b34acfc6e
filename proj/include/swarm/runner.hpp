#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <vector>

#include "swarm/config.hpp"
#include "swarm/diagnostics.hpp"
#include "swarm/io.hpp"
#include "swarm/scheme.hpp"
#include "swarm/state.hpp"

namespace swarm {

inline constexpr const char* kSchemeVersion = "1.0.0";

/// What an observer sees after initialisation (report and ledger null) and
/// after every step.
struct StepView {
  const ColonyState& state;
  const DerivedFields& derived;
  const StepReport* report;
  const BiomassLedger* ledger;
  double time;
};

struct RunSummary {
  std::size_t steps = 0;
  double max_relative_residual = 0.0;
  double max_cfl = 0.0;
  std::size_t water_clamps = 0;
  std::size_t concentration_clamps = 0;
  std::vector<double> final_e;
  double final_front = 0.0;
  std::size_t final_terraces = 0;
  PhaseTrace phases;
};

/// Steps `cfg` to its horizon, calling `observe` with every state. The ledger
/// is evaluated on every step.
template <class Observer>
RunSummary simulate(const RunConfig& cfg, Observer&& observe) {
  validate(cfg);
  const ModelParams& p = cfg.params;
  const GridSpec& grid = cfg.grid;
  ColonyState s = init_state(p, grid, cfg.initial_conditions());

  RunSummary sum;
  std::vector<double> front;
  front.reserve(grid.n_steps + 1);

  DerivedFields d = compute_derived(s, p, grid);
  front.push_back(front_position(d.e, grid.dx, cfg.diagnostics.front_threshold));
  observe(StepView{s, d, nullptr, nullptr, 0.0});

  double b_total = total_biomass(s, p, grid);
  for (std::size_t n = 0; n < grid.n_steps; ++n) {
    const LedgerBaseline base = ledger_baseline(s, d, p, grid, b_total);
    const StepReport r = advance(s, p, grid, cfg.scheme, d);
    const BiomassLedger l = close_ledger(base, s, r, p, grid);
    b_total = l.b_total;

    sum.steps = n + 1;
    sum.max_relative_residual = std::max(sum.max_relative_residual, l.relative_residual);
    sum.max_cfl = std::max(sum.max_cfl, r.cfl_number);
    sum.water_clamps += r.negative_water_clamps;
    sum.concentration_clamps += r.concentration_clamps;
    front.push_back(front_position(d.e, grid.dx, cfg.diagnostics.front_threshold));
    observe(StepView{s, d, &r, &l, static_cast<double>(n + 1) * grid.dt});
  }

  sum.final_e = d.e;
  sum.final_front = front.back();
  sum.final_terraces = count_terraces(d.e, cfg.diagnostics.terrace_prominence);
  const auto min_steps =
      static_cast<std::size_t>(std::llround(cfg.diagnostics.phase_min_duration / grid.dt));
  sum.phases = segment_phases(front, cfg.diagnostics.phase_tolerance, min_steps);
  return sum;
}

inline RunSummary simulate(const RunConfig& cfg) {
  return simulate(cfg, [](const StepView&) {});
}

/// Runs `cfg` and writes its files into cfg.outputs.dir:
///   manifest.cfg            resolved configuration
///   snapshots/snap_N.csv    every snapshot_every steps and at the final step
///   spacetime.csv           thickness rows at the snapshot times
///   ledger.csv              one row per step
///   front.csv, phases.csv   front trace and swarm/consolidation phases
/// A scheme abort leaves a PARTIAL marker describing the failure and rethrows.
inline RunSummary run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  validate(cfg);
  const fs::path dir = cfg.outputs.dir;
  fs::create_directories(dir);
  fs::remove(dir / "PARTIAL");
  write_text(dir / "manifest.cfg",
             std::string("# scheme_version = ") + kSchemeVersion + "\n" + write_config(cfg));

  const fs::path snap_dir = dir / "snapshots";
  if (cfg.outputs.snapshots) fs::create_directories(snap_dir);
  std::ofstream spacetime, ledger, front;
  if (cfg.outputs.spacetime) {
    spacetime.open(dir / "spacetime.csv", std::ios::binary | std::ios::trunc);
    spacetime << kSpacetimeHeader << '\n';
  }
  if (cfg.outputs.ledger) {
    ledger.open(dir / "ledger.csv", std::ios::binary | std::ios::trunc);
    ledger << kLedgerHeader << '\n';
  }
  if (cfg.outputs.phases) {
    front.open(dir / "front.csv", std::ios::binary | std::ios::trunc);
    front << kFrontHeader << '\n';
  }

  const std::size_t stride = cfg.outputs.snapshot_every;
  const std::size_t last = cfg.grid.n_steps;
  bool warned = false;
  auto observe = [&](const StepView& v) {
    const std::size_t n = v.state.step_index;
    if (n % stride == 0 || n == last) {
      if (cfg.outputs.snapshots)
        write_text(snap_dir / snapshot_name(n), format_snapshot(v.state, v.derived, cfg.grid.dx));
      if (cfg.outputs.spacetime) spacetime << format_spacetime_rows(v.time, v.derived.e, cfg.grid.dx);
    }
    if (v.ledger && cfg.outputs.ledger) ledger << format_ledger_row(n, *v.ledger, *v.report);
    if (cfg.outputs.phases)
      front << n << ',' << format_real(v.time) << ','
            << format_real(front_position(v.derived.e, cfg.grid.dx,
                                          cfg.diagnostics.front_threshold))
            << '\n';
    if (v.report && v.report->cfl_number > 1.0 && !warned) {
      warned = true;
      std::fprintf(stderr, "warning: CFL number %.3g exceeds 1 at step %zu\n",
                   v.report->cfl_number, n);
    }
  };

  try {
    RunSummary sum = simulate(cfg, observe);
    if (cfg.outputs.phases) write_text(dir / "phases.csv", format_phases(sum.phases, cfg.grid.dt));
    return sum;
  } catch (const std::exception& e) {
    spacetime.close();
    ledger.close();
    front.close();
    write_text(dir / "PARTIAL", std::string(e.what()) + "\n");
    throw;
  }
}

// ---------------------------------------------------------------------------
// Time-step comparison

struct ConvergenceRow {
  double dt_a = 0.0;
  double dt_b = 0.0;
  double t = 0.0;
  double l2_diff = 0.0;
};

/// Copy of `base` stepping with `dt` up to time `t`.
inline RunConfig with_time_step(RunConfig base, double dt, double t) {
  const double steps = t / dt;
  const auto n = std::llround(steps);
  if (n <= 0 || std::abs(static_cast<double>(n) * dt - t) > 1e-12 * std::max(1.0, t))
    throw InvalidArgument("compare", "time step does not divide the comparison time");
  base.grid.dt = dt;
  base.grid.n_steps = static_cast<std::size_t>(n);
  resize_grid(base);
  return base;
}

/// Thickness at time t for each time step, and the scaled L2 distance between
/// consecutive entries of `dts`. Runs are independent and execute concurrently.
inline std::vector<ConvergenceRow> compare(const RunConfig& base, const std::vector<double>& dts,
                                           double t) {
  std::vector<RunConfig> cfgs;
  for (double dt : dts) cfgs.push_back(with_time_step(base, dt, t));
  std::vector<std::future<RunSummary>> jobs;
  for (const auto& c : cfgs)
    jobs.push_back(std::async(std::launch::async, [&c] { return simulate(c); }));
  std::vector<ThicknessProfile> profiles;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto sum = jobs[j].get();
    profiles.push_back({static_cast<double>(cfgs[j].grid.n_steps) * cfgs[j].grid.dt,
                        cfgs[j].grid.dx, std::move(sum.final_e)});
  }
  std::vector<ConvergenceRow> rows;
  for (std::size_t j = 1; j < profiles.size(); ++j)
    rows.push_back({dts[j], dts[j - 1], t,
                    l2_thickness_diff(profiles[j], profiles[j - 1], base.params.x_max)});
  return rows;
}

inline std::string format_convergence(const std::vector<ConvergenceRow>& rows) {
  std::string out = kConvergenceHeader;
  out += '\n';
  for (const auto& r : rows)
    out += format_real(r.dt_a) + ',' + format_real(r.dt_b) + ',' + format_real(r.t) + ',' +
           format_real(r.l2_diff) + '\n';
  return out;
}

}  // namespace swarm
