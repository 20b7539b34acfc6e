#pragma once

// Explicit time stepper for the age-structured swarm colony.
//
// One step, reading time-n fields throughout:
//   1. derived fields E, M, N at n
//   2. interface velocities V from c(H) and the thickness gradient
//   3. vegetative growth plus de-differentiation inflow
//   4. seeding of the elongating ghost cohort from dividing vegetative cells
//   5. elongation ageing; cohorts past A(H) move to the dormant ghost row
//   6. dormancy ageing (the previous ghost enters p = 1)
//   7. upwind transport of dormant cohorts, expiry into the D buffer
//   8. agar water G
//   9. matrix water h, with upwind transport of water carried by swarmers
//  10. derived fields at n+1 and recovery of H = h / (η E)
//
// In strided mode (nu > 1) steps 3-7 age cohorts only every nu steps; see
// step_strided().

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarm/model.hpp"
#include "swarm/state.hpp"

namespace swarm {

/// Raised when a sub-step produces a non-finite value or a cohort overflows
/// its preallocated capacity. `sub_step()` names where it happened.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string sub_step, const std::string& what)
      : std::runtime_error(sub_step + ": " + what), sub_step_(std::move(sub_step)) {}
  const std::string& sub_step() const noexcept { return sub_step_; }

 private:
  std::string sub_step_;
};

/// How the de-differentiation buffer D enters the vegetative update.
/// `full` adds D as a biomass increment, which is what keeps the scheme
/// biomass preserving. `scaled_by_dt` multiplies it by Δt as the vegetative
/// formula is literally written.
enum class DedifferentiationFeed { full, scaled_by_dt };

struct SchemeOptions {
  int transport_sign = -1;  // -1: swarmers move down the thickness gradient
  DedifferentiationFeed feed = DedifferentiationFeed::full;

  bool operator==(const SchemeOptions&) const = default;
};

struct StepReport {
  double cfl_number = 0.0;
  std::size_t negative_water_clamps = 0;
  std::size_t concentration_clamps = 0;
  double boundary_outflux_biomass = 0.0;
  double boundary_outflux_water = 0.0;
  bool aged = true;          // cohorts were aged during this step
  double growth_dt = 0.0;    // time span of the division source this step
};

inline void require_finite(std::span<const double> v, const char* sub_step) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericalError(sub_step, "non-finite value");
}

/// χ((Ē - E)/Ē)·χ((Q - Q̄)/Q̄): 1 where vegetative cells divide.
inline double division_gate(double q, double e, const ModelParams& p) {
  return heaviside_chi((p.e_bar - e) / p.e_bar) * heaviside_chi((q - p.q_bar) / p.q_bar);
}

/// Q^{n+1} = Q + growth_dt·(1-ξ)/τ·Q·χχ + d_weight·D.
inline std::vector<double> update_vegetative(const ColonyState& s, const DerivedFields& d,
                                             const ModelParams& p, double growth_dt,
                                             double d_weight) {
  std::vector<double> q(s.q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] = s.q[i] + growth_dt * ((1.0 - p.xi) / p.tau * s.q[i] * division_gate(s.q[i], d.e[i], p)) +
           d_weight * s.d_buf[i];
  return q;
}

/// Elongating ghost cohort. The prefactor makes weight(1)·ζ_0 equal to the
/// differentiated biomass growth_dt·(ξ/τ)·Q·χχ.
inline std::vector<double> seed_elongating_ghost(const ColonyState& s, const DerivedFields& d,
                                                 const ModelParams& p, double da,
                                                 double growth_dt) {
  const double scale = growth_dt / ((std::exp(da / p.tau) - 1.0) * p.tau);
  std::vector<double> z0(s.q.size());
  for (std::size_t i = 0; i < z0.size(); ++i)
    z0[i] = scale * (p.xi / p.tau) * s.q[i] * division_gate(s.q[i], d.e[i], p);
  return z0;
}

/// Dormant ghost rows produced by one elongation ageing pass, indexed
/// [(k-1)*I + i] for k = 1..k_max.
struct CohortTransfer {
  std::size_t n_cells = 0;
  std::vector<double> values;

  double at(std::size_t k, std::size_t i) const { return values[(k - 1) * n_cells + i]; }
};

/// Shifts elongating cohorts by one age step (row 0 enters k = 1). Cohorts
/// whose new age centre exceeds A(H^n_i) are removed and returned, at their
/// post-shift index, as the next dormant ghost row.
inline CohortTransfer age_elongating(ColonyState& s, std::span<const double> h_at_n,
                                     const ModelParams& p, double da) {
  const std::size_t n = s.n_cells();
  const std::size_t k_max = s.k_max();
  for (double z : s.zeta_row(k_max))
    if (z != 0.0) throw NumericalError("age_elongating", "elongating cohort beyond k_max");

  std::vector<double> limit(n);
  for (std::size_t i = 0; i < n; ++i) limit[i] = threshold_age(h_at_n[i], p);

  CohortTransfer out{n, std::vector<double>(k_max * n, 0.0)};
  for (std::size_t k = k_max; k >= 1; --k) {
    const double age = (static_cast<double>(k) - 0.5) * da;
    auto dst = s.zeta_row(k);
    const auto src = s.zeta_row(k - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (age <= limit[i]) {
        dst[i] = src[i];
      } else {
        out.values[(k - 1) * n + i] = src[i];
        dst[i] = 0.0;
      }
    }
  }
  std::fill(s.zeta_row(0).begin(), s.zeta_row(0).end(), 0.0);
  return out;
}

/// Dormancy ageing: every cohort moves from p to p + 1 and the ghost row
/// empties.
inline void age_swarmers(ColonyState& s) {
  if (!s.advance_dormancy_clock())
    throw NumericalError("age_swarmers", "dormant cohort beyond p_max");
}

/// Writes the transfer into the (empty) dormant ghost row.
inline void install_dormant_ghost(ColonyState& s, const CohortTransfer& t) {
  const std::size_t n = s.n_cells();
  for (std::size_t k = 1; k <= s.k_max(); ++k) {
    const auto first = t.values.begin() + static_cast<std::ptrdiff_t>((k - 1) * n);
    if (std::all_of(first, first + static_cast<std::ptrdiff_t>(n),
                    [](double x) { return x == 0.0; }))
      continue;
    std::copy(first, first + static_cast<std::ptrdiff_t>(n), s.rho_row(k, 0).begin());
  }
}

/// 2/(1/a + 1/b), taken as 0 when either argument is 0.
inline double harmonic_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 / (1.0 / a + 1.0 / b);
}

/// Velocities at the I+1 interfaces x_{i-1/2} = (i-1)Δx. V at x = 0 is 0 and
/// the outflow interface copies its inner neighbour.
inline std::vector<double> interface_velocities(const DerivedFields& d,
                                                std::span<const double> h_at_n,
                                                const ModelParams& p, double dx,
                                                int sign = -1) {
  const std::size_t n = d.e.size();
  std::vector<double> v(n + 1, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    const double c = swarm_coefficient(harmonic_mean(h_at_n[j - 1], h_at_n[j]), p);
    v[j] = static_cast<double>(sign) * c * (d.e[j] - d.e[j - 1]) / dx;
  }
  if (n >= 2) v[n] = v[n - 1];
  return v;
}

/// Upwind flux for one interface: the donor is the left cell when V > 0.
constexpr double upwind_flux(double v, double left, double right) {
  return v <= 0.0 ? v * right : v * left;
}

/// Fluxes at all interfaces for one cohort row. Nothing enters from outside
/// the domain.
inline void upwind_fluxes(std::span<const double> v, std::span<const double> row,
                          std::span<double> flux) {
  const std::size_t n = row.size();
  flux[0] = upwind_flux(v[0], 0.0, row[0]);
  for (std::size_t j = 1; j < n; ++j) flux[j] = upwind_flux(v[j], row[j - 1], row[j]);
  flux[n] = upwind_flux(v[n], row[n - 1], 0.0);
}

inline std::vector<double> upwind_fluxes(std::span<const double> v,
                                         std::span<const double> row) {
  std::vector<double> flux(row.size() + 1);
  upwind_fluxes(v, row, flux);
  return flux;
}

struct AdvectionResult {
  std::vector<double> dedifferentiated;  // D^{n+1}
  double boundary_outflux = 0.0;         // biomass through x = x_max
};

/// Conservative upwind update of every dormant cohort. When `expire` is set,
/// cohorts past their life duration κa are emptied and their transported
/// biomass is collected in D.
inline AdvectionResult advect_and_expire_swarmers(ColonyState& s, std::span<const double> v,
                                                  const ModelParams& p, const GridSpec& grid,
                                                  bool expire = true) {
  const std::size_t n = s.n_cells();
  const double da = grid.age_step();
  const double lambda = grid.dt / grid.dx;
  AdvectionResult out{std::vector<double>(n, 0.0), 0.0};
  std::vector<double> flux(n + 1);

  for (std::size_t k = 1; k <= s.k_max(); ++k) {
    const double w = biomass_weight(k, da, p.tau);
    const std::size_t live = last_live_p(k, da, da, p.kappa);
    const std::size_t last = std::min(expire ? live + 1 : live, s.p_max());
    std::vector<std::size_t> expired;
    s.for_each_rho_row(k, 1, last, [&](std::size_t pp, std::span<double> row) {
      upwind_fluxes(v, row, flux);
      const bool alive = pp <= live;
      for (std::size_t i = 0; i < n; ++i) {
        const double candidate = row[i] + lambda * (flux[i] - flux[i + 1]);
        if (!std::isfinite(candidate))
          throw NumericalError("advect_and_expire_swarmers", "non-finite value");
        if (alive)
          row[i] = candidate;
        else
          out.dedifferentiated[i] += candidate * w;
      }
      if (!alive) expired.push_back(pp);
      out.boundary_outflux += grid.dt * w * flux[n];
    });
    for (std::size_t pp : expired) s.clear_rho_row(k, pp);
  }
  return out;
}

/// G^{n+1} = G - Δt γt T(E)(G - H) + Δt γd (1 - G).
inline std::vector<double> update_agar_water(const ColonyState& s, const DerivedFields& d,
                                             const ModelParams& p, double dt) {
  std::vector<double> g(s.g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = s.g[i] - dt * p.gamma_t * thickness_clip(d.e[i]) * (s.g[i] - s.h_conc[i]) +
           dt * p.gamma_d * (1.0 - s.g[i]);
  return g;
}

struct WaterUpdate {
  std::vector<double> h_qty;
  std::size_t clamps = 0;
  double boundary_outflux = 0.0;
};

/// Matrix water quantity: consumption by vegetative and elongating cells,
/// exchange with agar, and upwind transport of the water carried by swarmers.
/// Negative results are clamped to 0 and counted.
inline WaterUpdate update_matrix_water(const ColonyState& s, const DerivedFields& d,
                                       std::span<const double> v, const ModelParams& p,
                                       const GridSpec& grid) {
  const std::size_t n = s.n_cells();
  const double dt = grid.dt;
  std::vector<double> carried(n);
  for (std::size_t i = 0; i < n; ++i) carried[i] = p.eta * d.n_swarm[i] * s.h_conc[i];
  std::vector<double> flux(n + 1);
  upwind_fluxes(v, carried, flux);

  WaterUpdate out{std::vector<double>(n), 0, dt * flux[n]};
  for (std::size_t i = 0; i < n; ++i) {
    const double gate = division_gate(s.q[i], d.e[i], p);
    double h = s.h_qty[i] - dt * (p.alpha - (1.0 - gate) * p.alpha_prime) * s.q[i] -
               dt * p.alpha * d.m[i] +
               dt * p.gamma_t * thickness_clip(d.e[i]) * (s.g[i] - s.h_conc[i]) +
               dt / grid.dx * (flux[i] - flux[i + 1]);
    if (h < 0.0) {
      h = 0.0;
      ++out.clamps;
    }
    out.h_qty[i] = h;
  }
  return out;
}

struct ConcentrationUpdate {
  std::vector<double> h_conc;
  std::size_t clamps = 0;
};

/// H = h / (η E), 0 in dry cells, clamped into [0, 1].
inline ConcentrationUpdate recover_concentration(std::span<const double> h_qty,
                                                 std::span<const double> e_new,
                                                 const ModelParams& p) {
  ConcentrationUpdate out{std::vector<double>(h_qty.size(), 0.0), 0};
  for (std::size_t i = 0; i < h_qty.size(); ++i) {
    if (e_new[i] <= kDryThickness) continue;
    double h = h_qty[i] / (p.eta * e_new[i]);
    if (h < 0.0 || h > 1.0) {
      h = std::clamp(h, 0.0, 1.0);
      ++out.clamps;
    }
    out.h_conc[i] = h;
  }
  return out;
}

inline double cfl_number(std::span<const double> v, double dt, double dx) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x) * dt / dx);
  return m;
}

namespace detail {

struct Phase {
  bool age;            // run elongation and dormancy ageing
  double growth_dt;    // division time span (0 when not ageing)
  double d_weight;     // multiplier of the D buffer fed into Q
};

// `derived` holds the fields of `s` on entry and of the new state on exit.
inline StepReport advance(ColonyState& s, const ModelParams& p, const GridSpec& grid,
                          const SchemeOptions& opt, const Phase& phase, DerivedFields& derived) {
  const double da = grid.age_step();
  StepReport report;
  report.aged = phase.age;
  report.growth_dt = phase.growth_dt;

  const DerivedFields& d = derived;
  require_finite(d.e, "compute_derived");
  for (double e : d.e)
    if (e < 0.0) throw NumericalError("compute_derived", "negative thickness");

  const auto v = interface_velocities(d, s.h_conc, p, grid.dx, opt.transport_sign);
  require_finite(v, "interface_velocities");
  report.cfl_number = cfl_number(v, grid.dt, grid.dx);

  auto q_new = update_vegetative(s, d, p, phase.growth_dt, phase.d_weight);
  require_finite(q_new, "update_vegetative");

  AdvectionResult adv;
  if (phase.age) {
    const auto z0 = seed_elongating_ghost(s, d, p, da, phase.growth_dt);
    require_finite(z0, "seed_elongating_ghost");
    std::copy(z0.begin(), z0.end(), s.zeta_row(0).begin());

    const auto transfer = age_elongating(s, s.h_conc, p, da);
    age_swarmers(s);
    install_dormant_ghost(s, transfer);
    adv = advect_and_expire_swarmers(s, v, p, grid, true);
  } else {
    adv = advect_and_expire_swarmers(s, v, p, grid, false);
  }
  report.boundary_outflux_biomass = adv.boundary_outflux;

  auto g_new = update_agar_water(s, d, p, grid.dt);
  require_finite(g_new, "update_agar_water");

  auto water = update_matrix_water(s, d, v, p, grid);
  require_finite(water.h_qty, "update_matrix_water");
  report.negative_water_clamps = water.clamps;
  report.boundary_outflux_water = water.boundary_outflux;

  // D consumed this step is replaced by what expired now.
  for (std::size_t i = 0; i < s.n_cells(); ++i) {
    const double left = phase.d_weight == 0.0 ? s.d_buf[i] : 0.0;
    s.d_buf[i] = left + adv.dedifferentiated[i];
  }
  s.q = std::move(q_new);
  s.g = std::move(g_new);
  s.h_qty = std::move(water.h_qty);

  derived = compute_derived(s, p, grid);
  auto conc = recover_concentration(s.h_qty, derived.e, p);
  require_finite(conc.h_conc, "recover_concentration");
  s.h_conc = std::move(conc.h_conc);
  report.concentration_clamps = conc.clamps;

  ++s.step_index;
  return report;
}

}  // namespace detail

/// One step of the standard scheme (Δa = Δb = Δt). `derived` must hold the
/// fields of `s`; it is updated to the fields of the new state.
inline StepReport step(ColonyState& s, const ModelParams& p, const GridSpec& grid,
                       const SchemeOptions& opt, DerivedFields& derived) {
  const double d_weight = opt.feed == DedifferentiationFeed::full ? 1.0 : grid.dt;
  return detail::advance(s, p, grid, opt, {true, grid.dt, d_weight}, derived);
}

inline StepReport step(ColonyState& s, const ModelParams& p, const GridSpec& grid,
                       const SchemeOptions& opt = {}) {
  DerivedFields d = compute_derived(s, p, grid);
  return step(s, p, grid, opt, d);
}

/// Step n ages cohorts when n is a multiple of nu.
constexpr bool is_ageing_step(std::size_t n, std::size_t nu) { return nu <= 1 || n % nu == 0; }

/// Step n feeds the D buffer into Q when it directly follows an ageing step.
constexpr bool is_feeding_step(std::size_t n, std::size_t nu) { return nu > 1 && n % nu == 1; }

/// Strided ageing with Δa = Δb = nu·Δt. Ageing steps use nu·Δt for division
/// and differentiation and do not feed D; the step after each ageing step adds
/// the collected D to Q; transport and the water fields advance every step.
inline StepReport step_strided(ColonyState& s, const ModelParams& p, const GridSpec& grid,
                               const SchemeOptions& opt, DerivedFields& derived) {
  if (grid.nu <= 1) return step(s, p, grid, opt, derived);
  const std::size_t n = s.step_index;
  if (is_ageing_step(n, grid.nu))
    return detail::advance(s, p, grid, opt, {true, grid.age_step(), 0.0}, derived);
  const double d_weight = is_feeding_step(n, grid.nu) ? 1.0 : 0.0;
  return detail::advance(s, p, grid, opt, {false, 0.0, d_weight}, derived);
}

inline StepReport step_strided(ColonyState& s, const ModelParams& p, const GridSpec& grid,
                               const SchemeOptions& opt = {}) {
  DerivedFields d = compute_derived(s, p, grid);
  return step_strided(s, p, grid, opt, d);
}

/// Dispatches on grid.nu.
inline StepReport advance(ColonyState& s, const ModelParams& p, const GridSpec& grid,
                          const SchemeOptions& opt, DerivedFields& derived) {
  return grid.nu <= 1 ? step(s, p, grid, opt, derived) : step_strided(s, p, grid, opt, derived);
}

inline StepReport advance(ColonyState& s, const ModelParams& p, const GridSpec& grid,
                          const SchemeOptions& opt = {}) {
  DerivedFields d = compute_derived(s, p, grid);
  return advance(s, p, grid, opt, d);
}

}  // namespace swarm
