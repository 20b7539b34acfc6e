#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "swarm/model.hpp"

namespace swarm {

/// Population and water fields at one time index.
///
/// Elongating cohorts are stored for k = 0..k_max (row 0 is the inflow ghost).
/// Dormant cohorts are stored for k = 1..k_max and p = 0..p_max (p = 0 is the
/// inflow ghost). The dormancy axis is a ring: ageing all cohorts by one
/// dormancy step is `advance_dormancy_clock()` and moves no data.
class ColonyState {
 public:
  ColonyState() = default;
  ColonyState(std::size_t n_cells, std::size_t k_max, std::size_t p_max)
      : q(n_cells, 0.0),
        h_qty(n_cells, 0.0),
        h_conc(n_cells, 0.0),
        g(n_cells, 0.0),
        d_buf(n_cells, 0.0),
        n_cells_(n_cells),
        k_max_(k_max),
        p_max_(p_max),
        zeta_((k_max + 1) * n_cells, 0.0),
        rho_(k_max * (p_max + 1) * n_cells, 0.0),
        rho_active_(k_max * (p_max + 1), 0),
        rho_active_count_(k_max + 1, 0) {}

  std::size_t n_cells() const { return n_cells_; }
  std::size_t k_max() const { return k_max_; }
  std::size_t p_max() const { return p_max_; }

  std::span<double> zeta_row(std::size_t k) {
    return {zeta_.data() + k * n_cells_, n_cells_};
  }
  std::span<const double> zeta_row(std::size_t k) const {
    return {zeta_.data() + k * n_cells_, n_cells_};
  }
  double& zeta(std::size_t k, std::size_t i) { return zeta_[k * n_cells_ + i]; }
  double zeta(std::size_t k, std::size_t i) const { return zeta_[k * n_cells_ + i]; }

  /// Mutable access marks the row as possibly non-zero.
  std::span<double> rho_row(std::size_t k, std::size_t p) {
    mark(k, row_index(k, p));
    return {rho_.data() + rho_offset(k, p), n_cells_};
  }
  std::span<const double> rho_row(std::size_t k, std::size_t p) const {
    return {rho_.data() + rho_offset(k, p), n_cells_};
  }
  double& rho(std::size_t k, std::size_t p, std::size_t i) {
    mark(k, row_index(k, p));
    return rho_[rho_offset(k, p) + i];
  }
  double rho(std::size_t k, std::size_t p, std::size_t i) const {
    return rho_[rho_offset(k, p) + i];
  }

  /// False only if the row is known to be all zero.
  bool rho_row_active(std::size_t k, std::size_t p) const { return rho_active_[row_index(k, p)]; }

  void clear_rho_row(std::size_t k, std::size_t p) {
    const std::size_t off = rho_offset(k, p);
    std::fill(rho_.begin() + off, rho_.begin() + off + n_cells_, 0.0);
    unmark(k, row_index(k, p));
  }

  /// Calls fn(p, row) for p = p_lo..p_hi, skipping rows known to be zero.
  template <class Fn>
  void for_each_rho_row(std::size_t k, std::size_t p_lo, std::size_t p_hi, Fn&& fn) const {
    visit_rows(*this, k, p_lo, p_hi, fn);
  }
  template <class Fn>
  void for_each_rho_row(std::size_t k, std::size_t p_lo, std::size_t p_hi, Fn&& fn) {
    visit_rows(*this, k, p_lo, p_hi, fn);
  }

  /// Shifts every dormant cohort from p to p + 1 (the ghost row enters p = 1).
  /// Returns false, leaving the state untouched, when a cohort at p = p_max
  /// holds mass that would be pushed past the capacity.
  bool advance_dormancy_clock() {
    const std::size_t slots = p_max_ + 1;
    const std::size_t recycled = (clock_ + 1) % slots;
    for (std::size_t k = 1; k <= k_max_; ++k) {
      const std::size_t r = (k - 1) * slots + recycled;
      if (!rho_active_[r]) continue;
      const double* row = rho_.data() + r * n_cells_;
      for (std::size_t i = 0; i < n_cells_; ++i)
        if (row[i] != 0.0) return false;
    }
    for (std::size_t k = 1; k <= k_max_; ++k) unmark(k, (k - 1) * slots + recycled);
    ++clock_;
    return true;
  }

  std::size_t step_index = 0;
  std::vector<double> q;
  std::vector<double> h_qty;
  std::vector<double> h_conc;
  std::vector<double> g;
  std::vector<double> d_buf;

 private:
  void mark(std::size_t k, std::size_t r) {
    if (!rho_active_[r]) {
      rho_active_[r] = 1;
      ++rho_active_count_[k];
    }
  }
  void unmark(std::size_t k, std::size_t r) {
    if (rho_active_[r]) {
      rho_active_[r] = 0;
      --rho_active_count_[k];
    }
  }

  template <class Self, class Fn>
  static void visit_rows(Self& self, std::size_t k, std::size_t p_lo, std::size_t p_hi, Fn& fn) {
    if (self.rho_active_count_[k] == 0 || p_lo > p_hi) return;
    const std::size_t slots = self.p_max_ + 1;
    const std::size_t base = (k - 1) * slots;
    std::size_t slot = (self.clock_ + slots - p_lo % slots) % slots;
    for (std::size_t p = p_lo; p <= p_hi; ++p) {
      if (self.rho_active_[base + slot]) {
        auto* data = self.rho_.data() + (base + slot) * self.n_cells_;
        using Row = std::conditional_t<std::is_const_v<Self>, std::span<const double>,
                                       std::span<double>>;
        fn(p, Row(data, self.n_cells_));
      }
      slot = slot == 0 ? slots - 1 : slot - 1;
    }
  }

  std::size_t row_index(std::size_t k, std::size_t p) const {
    const std::size_t slots = p_max_ + 1;
    const std::size_t slot = (clock_ + slots - p % slots) % slots;
    return (k - 1) * slots + slot;
  }
  std::size_t rho_offset(std::size_t k, std::size_t p) const { return row_index(k, p) * n_cells_; }

  std::size_t n_cells_ = 0;
  std::size_t k_max_ = 0;
  std::size_t p_max_ = 0;
  std::size_t clock_ = 0;
  std::vector<double> zeta_;
  std::vector<double> rho_;
  std::vector<unsigned char> rho_active_;
  std::vector<std::size_t> rho_active_count_;
};

/// Thickness E = Q + M + N and the two cohort biomass densities, per cell.
struct DerivedFields {
  std::vector<double> e;
  std::vector<double> m;
  std::vector<double> n_swarm;
};

/// A constant value on [x_lo, x_hi].
struct Segment {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double value = 0.0;

  bool operator==(const Segment&) const = default;
};

/// Initial data. Q0 is piecewise constant; H0 and G0 are scalars unless a
/// per-cell profile is supplied. Cohort data, when present, is given directly
/// as cohort averages (exact for data that is piecewise constant per cohort):
/// zeta0[(k-1)*I + i] for k = 1..k_max and rho0[((k-1)*p_max + (p-1))*I + i].
struct InitialConditions {
  std::vector<Segment> q0;
  double h0 = 0.0;
  double g0 = 1.0;
  std::optional<std::vector<double>> h0_profile;
  std::optional<std::vector<double>> g0_profile;
  std::optional<std::vector<double>> zeta0;
  std::optional<std::vector<double>> rho0;
};

/// Cell average of a piecewise-constant profile over [lo, hi].
inline double cell_average(std::span<const Segment> segments, double lo, double hi) {
  double acc = 0.0;
  for (const auto& s : segments) {
    const double a = std::max(lo, s.x_lo);
    const double b = std::min(hi, s.x_hi);
    if (b > a) acc += (b - a) * s.value;
  }
  return acc / (hi - lo);
}

inline DerivedFields compute_derived(const ColonyState& s, const ModelParams& p,
                                     const GridSpec& grid) {
  const std::size_t n = s.n_cells();
  const double da = grid.age_step();
  const double db = da;
  DerivedFields d{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                  std::vector<double>(n, 0.0)};
  for (std::size_t k = 1; k <= s.k_max(); ++k) {
    const double w = biomass_weight(k, da, p.tau);
    const auto z = s.zeta_row(k);
    for (std::size_t i = 0; i < n; ++i) d.m[i] += w * z[i];
  }
  for (std::size_t k = 1; k <= s.k_max(); ++k) {
    const double w = biomass_weight(k, da, p.tau);
    const std::size_t live = std::min(last_live_p(k, da, db, p.kappa), s.p_max());
    s.for_each_rho_row(k, 1, live, [&](std::size_t, std::span<const double> r) {
      for (std::size_t i = 0; i < n; ++i) d.n_swarm[i] += w * r[i];
    });
  }
  for (std::size_t i = 0; i < n; ++i) d.e[i] = s.q[i] + d.m[i] + d.n_swarm[i];
  return d;
}

/// Below this thickness a cell is dry and its matrix concentration is 0.
inline constexpr double kDryThickness = 1e-12;

inline ColonyState init_state(const ModelParams& p, const GridSpec& grid,
                              const InitialConditions& init) {
  validate(p);
  validate(grid, p);
  const std::size_t n = grid.n_cells;
  ColonyState s(n, grid.k_max, grid.p_max);

  for (const auto& seg : init.q0) {
    if (seg.value < 0.0 || !std::isfinite(seg.value))
      throw InvalidArgument("init.q0.segments", "negative or non-finite value");
    if (!(seg.x_hi >= seg.x_lo)) throw InvalidArgument("init.q0.segments", "x_hi < x_lo");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) * grid.dx;
    s.q[i] = cell_average(init.q0, lo, lo + grid.dx);
  }

  auto profile = [n](const std::optional<std::vector<double>>& prof, double scalar,
                     const char* key) {
    std::vector<double> v(n, scalar);
    if (prof) {
      if (prof->size() != n) throw InvalidArgument(key, "profile size must equal n_cells");
      v = *prof;
    }
    for (double x : v)
      if (x < 0.0 || !std::isfinite(x)) throw InvalidArgument(key, "negative or non-finite value");
    return v;
  };
  const auto h0 = profile(init.h0_profile, init.h0, "init.h0");
  s.g = profile(init.g0_profile, init.g0, "init.g0");

  if (init.zeta0) {
    if (init.zeta0->size() != grid.k_max * n)
      throw InvalidArgument("init.zeta0", "size must equal k_max * n_cells");
    for (std::size_t k = 1; k <= grid.k_max; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        const double v = (*init.zeta0)[(k - 1) * n + i];
        if (v < 0.0 || !std::isfinite(v)) throw InvalidArgument("init.zeta0", "negative value");
        s.zeta(k, i) = v;
      }
  }
  if (init.rho0) {
    if (init.rho0->size() != grid.k_max * grid.p_max * n)
      throw InvalidArgument("init.rho0", "size must equal k_max * p_max * n_cells");
    const double da = grid.age_step();
    for (std::size_t k = 1; k <= grid.k_max; ++k)
      for (std::size_t pp = 1; pp <= grid.p_max; ++pp)
        for (std::size_t i = 0; i < n; ++i) {
          const double v = (*init.rho0)[((k - 1) * grid.p_max + (pp - 1)) * n + i];
          if (v < 0.0 || !std::isfinite(v)) throw InvalidArgument("init.rho0", "negative value");
          if (v != 0.0 && !dormant_alive(k, pp, da, da, p.kappa))
            throw InvalidArgument("init.rho0", "mass in an expired dormancy cohort");
          if (v != 0.0) s.rho(k, pp, i) = v;
        }
  }

  const auto d = compute_derived(s, p, grid);
  for (std::size_t i = 0; i < n; ++i) {
    if (d.e[i] > kDryThickness) {
      s.h_qty[i] = p.eta * d.e[i] * h0[i];
      s.h_conc[i] = h0[i];
    }
  }
  return s;
}

}  // namespace swarm
