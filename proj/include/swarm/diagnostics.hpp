#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swarm/model.hpp"
#include "swarm/scheme.hpp"
#include "swarm/state.hpp"

namespace swarm {

// ---------------------------------------------------------------------------
// Biomass ledger

/// Total biomass Δx·Σ_i [Q + M + all dormant cohorts including the ghost row + D].
inline double total_biomass(const ColonyState& s, const ModelParams& p, const GridSpec& grid) {
  const std::size_t n = s.n_cells();
  const double da = grid.age_step();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += s.q[i] + s.d_buf[i];
  for (std::size_t k = 1; k <= s.k_max(); ++k) {
    const double w = biomass_weight(k, da, p.tau);
    double cohort = 0.0;
    for (double z : s.zeta_row(k)) cohort += z;
    // Dormant cohorts past p = last_live + 1 are empty by construction.
    const std::size_t last = std::min(last_live_p(k, da, da, p.kappa) + 1, s.p_max());
    s.for_each_rho_row(k, 0, last, [&](std::size_t, std::span<const double> row) {
      for (double r : row) cohort += r;
    });
    acc += w * cohort;
  }
  return grid.dx * acc;
}

struct BiomassLedger {
  double b_previous = 0.0;
  double b_total = 0.0;
  double division_source = 0.0;
  double elongation_growth = 0.0;
  double boundary_outflux = 0.0;
  double residual = 0.0;
  double relative_residual = 0.0;
};

inline constexpr double kLedgerFloor = 1e-30;

/// What a ledger needs from the state a step starts from.
struct LedgerBaseline {
  std::size_t step_index = 0;
  double b_total = 0.0;
  double gated_q = 0.0;  // Δx·Σ_i Q_i·χχ_i / τ
  double m_total = 0.0;  // Δx·Σ_i M_i
};

/// `d` must be the derived fields of `before`; `b_total` its total biomass
/// when already known.
inline LedgerBaseline ledger_baseline(const ColonyState& before, const DerivedFields& d,
                                      const ModelParams& p, const GridSpec& grid,
                                      double b_total = -1.0) {
  LedgerBaseline b;
  b.step_index = before.step_index;
  b.b_total = b_total >= 0.0 ? b_total : total_biomass(before, p, grid);
  for (std::size_t i = 0; i < before.n_cells(); ++i) {
    b.gated_q += before.q[i] * division_gate(before.q[i], d.e[i], p) / p.tau;
    b.m_total += d.m[i];
  }
  b.gated_q *= grid.dx;
  b.m_total *= grid.dx;
  return b;
}

/// Closes the ledger of the step that started from `base` and produced `after`.
/// The division source covers growth_dt of the report (differentiated biomass
/// included); elongation grows every elongating cohort by e^{Δa/τ} - 1 on
/// ageing steps.
inline BiomassLedger close_ledger(const LedgerBaseline& base, const ColonyState& after,
                                  const StepReport& report, const ModelParams& p,
                                  const GridSpec& grid) {
  if (after.step_index != base.step_index + 1)
    throw InvalidArgument("ledger", "states are not consecutive");
  BiomassLedger l;
  l.b_previous = base.b_total;
  l.b_total = total_biomass(after, p, grid);
  l.division_source = report.growth_dt * base.gated_q;
  l.elongation_growth =
      report.aged ? (std::exp(grid.age_step() / p.tau) - 1.0) * base.m_total : 0.0;
  l.boundary_outflux = report.boundary_outflux_biomass;
  l.residual = l.b_total - l.b_previous - l.division_source - l.elongation_growth +
               l.boundary_outflux;
  l.relative_residual = std::abs(l.residual) / std::max(l.b_total, kLedgerFloor);
  return l;
}

inline BiomassLedger evaluate_ledger(const ColonyState& before, const ColonyState& after,
                                     const StepReport& report, const ModelParams& p,
                                     const GridSpec& grid) {
  return close_ledger(ledger_baseline(before, compute_derived(before, p, grid), p, grid), after,
                      report, p, grid);
}

// ---------------------------------------------------------------------------
// Profiles

/// Thickness profile of one run at a given physical time.
struct ThicknessProfile {
  double time = 0.0;
  double dx = 0.0;
  std::vector<double> e;
};

/// (Δx / x_max)·sqrt(Σ_i (E_a - E_b)^2) between two profiles on the same grid.
inline double l2_thickness_diff(const ThicknessProfile& a, const ThicknessProfile& b,
                                double x_max) {
  if (a.e.size() != b.e.size() || std::abs(a.dx - b.dx) > 1e-12)
    throw InvalidArgument("compare", "profiles are on different grids");
  if (std::abs(a.time - b.time) > 1e-9)
    throw InvalidArgument("compare", "profiles are taken at different times");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.e.size(); ++i) acc += (a.e[i] - b.e[i]) * (a.e[i] - b.e[i]);
  return a.dx / x_max * std::sqrt(acc);
}

inline constexpr double kFrontThreshold = 1e-3;
inline constexpr double kTerraceProminence = 0.05;

/// Right edge x_{i+1/2} of the outermost cell thicker than `threshold`; 0 if none.
inline double front_position(std::span<const double> e, double dx,
                             double threshold = kFrontThreshold) {
  for (std::size_t i = e.size(); i-- > 0;)
    if (e[i] > threshold) return static_cast<double>(i + 1) * dx;
  return 0.0;
}

/// Number of interior local maxima (a plateau counts once) whose prominence,
/// the height above the higher of the two flanking minima, reaches
/// `min_prominence`. A flanking minimum is the lowest value between the peak
/// and the nearest strictly higher point on that side (or the profile end).
inline std::size_t count_terraces(std::span<const double> e,
                                  double min_prominence = kTerraceProminence) {
  struct Run {
    double value;
  };
  std::vector<Run> runs;
  for (double x : e)
    if (runs.empty() || runs.back().value != x) runs.push_back({x});

  std::size_t count = 0;
  for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
    const double peak = runs[r].value;
    if (!(runs[r - 1].value < peak && runs[r + 1].value < peak)) continue;
    double left = peak;
    for (std::size_t j = r; j-- > 0;) {
      if (runs[j].value > peak) break;
      left = std::min(left, runs[j].value);
    }
    double right = peak;
    for (std::size_t j = r + 1; j < runs.size(); ++j) {
      if (runs[j].value > peak) break;
      right = std::min(right, runs[j].value);
    }
    if (peak - std::max(left, right) >= min_prominence) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Swarm / consolidation phases

enum class PhaseKind { swarm, consolidation };

inline const char* to_string(PhaseKind k) {
  return k == PhaseKind::swarm ? "swarm" : "consolidation";
}

struct Phase {
  PhaseKind kind;
  std::size_t start = 0;  // first step, inclusive
  std::size_t end = 0;    // last step, inclusive
};

struct PhaseTrace {
  std::vector<double> front_position;
  std::vector<Phase> phases;
  std::size_t retreats = 0;  // steps where the front moved backwards
};

/// Splits a front trace into maximal stationary stretches (front displacement
/// within `stationary_tolerance` for at least `min_duration` steps) and the
/// swarm phases between them. Phases tile [0, trace.size()).
inline PhaseTrace segment_phases(std::span<const double> front, double stationary_tolerance,
                                 std::size_t min_duration) {
  PhaseTrace out;
  out.front_position.assign(front.begin(), front.end());
  for (std::size_t j = 1; j < front.size(); ++j)
    if (front[j] < front[j - 1]) ++out.retreats;

  auto push = [&out](PhaseKind kind, std::size_t a, std::size_t b) {
    if (kind == PhaseKind::swarm && !out.phases.empty() && out.phases.back().kind == kind) {
      out.phases.back().end = b;
      return;
    }
    out.phases.push_back({kind, a, b});
  };

  std::size_t s = 0;
  while (s < front.size()) {
    // The step on which the front jumps belongs to the swarm phase.
    if (s > 0 && std::abs(front[s] - front[s - 1]) > stationary_tolerance) {
      push(PhaseKind::swarm, s, s);
      ++s;
      continue;
    }
    double lo = front[s];
    double hi = front[s];
    std::size_t e = s;
    while (e + 1 < front.size()) {
      const double nlo = std::min(lo, front[e + 1]);
      const double nhi = std::max(hi, front[e + 1]);
      if (nhi - nlo > stationary_tolerance) break;
      lo = nlo;
      hi = nhi;
      ++e;
    }
    if (e - s + 1 >= min_duration) {
      push(PhaseKind::consolidation, s, e);
      s = e + 1;
    } else {
      push(PhaseKind::swarm, s, s);
      ++s;
    }
  }
  return out;
}

}  // namespace swarm
