#pragma once

// Model constants, grid description and the closure functions shared by the
// scheme: the Heaviside gate, the thickness clip T(E), the swarm mobility law
// c(H), the differentiation threshold age A(H) and the cohort biomass weights.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarm {

/// Thrown when a parameter, grid or state violates its contract. `key()` names
/// the offending field using the configuration key spelling (e.g. "params.xi").
class InvalidArgument : public std::invalid_argument {
 public:
  InvalidArgument(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct ModelParams {
  double xi = 0.1;            // differentiating proportion
  double tau = 1.0;           // growth time scale
  double e_bar = 1.0;         // thickness above which division stops
  double q_bar = 0.2;         // vegetative density below which division stops
  double gamma_t = 0.5;       // matrix/agar water transfer rate
  double gamma_d = 0.9;       // agar relaxation rate toward 1
  double eta = 0.5;           // matrix volume fraction
  double a_w = 1.0;           // threshold age at H = 1
  double a_d = 3.5;           // threshold age at H = 0
  double kappa = 2.0;         // dormant life duration per unit elongation age
  double alpha = 0.3;         // metabolic water consumption
  double alpha_prime = 0.28;  // consumption reduction while division is off
  double c_max = 0.2;         // swarm mobility below h_crit
  double h_crit = 0.5;        // mobility cutoff concentration
  double x_max = 1.65;        // domain length

  bool operator==(const ModelParams&) const = default;
};

inline void validate(const ModelParams& p) {
  auto finite = [](double v) { return std::isfinite(v); };
  const std::pair<const char*, double> all[] = {
      {"params.xi", p.xi},         {"params.tau", p.tau},
      {"params.e_bar", p.e_bar},   {"params.q_bar", p.q_bar},
      {"params.gamma_t", p.gamma_t}, {"params.gamma_d", p.gamma_d},
      {"params.eta", p.eta},       {"params.a_w", p.a_w},
      {"params.a_d", p.a_d},       {"params.kappa", p.kappa},
      {"params.alpha", p.alpha},   {"params.alpha_prime", p.alpha_prime},
      {"params.c_max", p.c_max},   {"params.h_crit", p.h_crit},
      {"params.x_max", p.x_max}};
  for (const auto& [key, v] : all)
    if (!finite(v)) throw InvalidArgument(key, "must be finite");

  if (p.xi < 0.0 || p.xi > 1.0) throw InvalidArgument("params.xi", "must lie in [0,1]");
  if (p.tau <= 0.0) throw InvalidArgument("params.tau", "must be > 0");
  if (p.e_bar <= 0.0) throw InvalidArgument("params.e_bar", "must be > 0");
  if (p.q_bar <= 0.0) throw InvalidArgument("params.q_bar", "must be > 0");
  if (p.gamma_t < 0.0) throw InvalidArgument("params.gamma_t", "must be >= 0");
  if (p.gamma_d < 0.0) throw InvalidArgument("params.gamma_d", "must be >= 0");
  if (p.eta <= 0.0 || p.eta > 1.0) throw InvalidArgument("params.eta", "must lie in (0,1]");
  if (p.a_w < 0.0) throw InvalidArgument("params.a_w", "must be >= 0");
  if (p.a_w > p.a_d) throw InvalidArgument("params.a_d", "must be >= params.a_w");
  if (p.kappa <= 0.0) throw InvalidArgument("params.kappa", "must be > 0");
  if (p.alpha < 0.0) throw InvalidArgument("params.alpha", "must be >= 0");
  if (p.alpha_prime < 0.0 || p.alpha_prime > p.alpha)
    throw InvalidArgument("params.alpha_prime", "must lie in [0, alpha]");
  if (p.c_max < 0.0) throw InvalidArgument("params.c_max", "must be >= 0");
  if (p.h_crit < 0.0 || p.h_crit > 1.0) throw InvalidArgument("params.h_crit", "must lie in [0,1]");
  if (p.x_max <= 0.0) throw InvalidArgument("params.x_max", "must be > 0");
}

/// Time, age and space discretization. Ageing happens every `nu` steps, so the
/// age steps are Δa = Δb = nu·Δt (nu = 1 is the standard scheme).
struct GridSpec {
  double dt = 0.01;
  double dx = 0.15;
  std::size_t n_cells = 10;
  std::size_t n_steps = 2500;
  std::size_t nu = 1;
  std::size_t k_max = 0;  // elongation cohorts, k = 1..k_max
  std::size_t p_max = 0;  // dormancy cohorts, p = 1..p_max

  double age_step() const { return static_cast<double>(nu) * dt; }

  bool operator==(const GridSpec&) const = default;
};

inline std::size_t min_k_max(const ModelParams& p, double da) {
  return static_cast<std::size_t>(std::ceil(p.a_d / da)) + 1;
}

inline std::size_t min_p_max(const ModelParams& p, std::size_t k_max, double da) {
  const double db = da;
  return static_cast<std::size_t>(
             std::ceil(p.kappa * (static_cast<double>(k_max) - 0.5) * da / db)) + 1;
}

/// Builds a grid for the domain of `p`; cohort capacities are sized from a_d and κ.
inline GridSpec make_grid(const ModelParams& p, double dt, double dx, std::size_t n_steps,
                          std::size_t nu = 1) {
  GridSpec g;
  g.dt = dt;
  g.dx = dx;
  g.n_cells = static_cast<std::size_t>(std::llround(p.x_max / dx));
  g.n_steps = n_steps;
  g.nu = nu;
  g.k_max = min_k_max(p, g.age_step());
  g.p_max = min_p_max(p, g.k_max, g.age_step());
  return g;
}

inline void validate(const GridSpec& g, const ModelParams& p) {
  if (!(g.dt > 0.0) || !std::isfinite(g.dt)) throw InvalidArgument("grid.dt", "must be > 0");
  if (!(g.dx > 0.0) || !std::isfinite(g.dx)) throw InvalidArgument("grid.dx", "must be > 0");
  if (g.n_cells == 0) throw InvalidArgument("grid.n_cells", "must be >= 1");
  if (g.nu == 0) throw InvalidArgument("grid.nu", "must be >= 1");
  if (std::abs(static_cast<double>(g.n_cells) * g.dx - p.x_max) > 1e-12)
    throw InvalidArgument("grid.dx", "n_cells * dx must equal params.x_max");
  const double da = g.age_step();
  if (g.k_max < min_k_max(p, da))
    throw InvalidArgument("grid.k_max", "must be >= ceil(a_d/da) + 1 = " +
                                            std::to_string(min_k_max(p, da)));
  if (g.p_max < min_p_max(p, g.k_max, da))
    throw InvalidArgument("grid.p_max", "must be >= ceil(kappa (k_max - 1/2)) + 1 = " +
                                            std::to_string(min_p_max(p, g.k_max, da)));
}

// ---------------------------------------------------------------------------
// Closures

/// χ(v): 0 for v < 0, 1 otherwise (so χ(0) = 1).
constexpr double heaviside_chi(double v) { return v < 0.0 ? 0.0 : 1.0; }

/// T(E) = min(E, 1).
inline double thickness_clip(double e) {
  if (e < 0.0) throw InvalidArgument("thickness", "negative thickness");
  return e <= 1.0 ? e : 1.0;
}

/// c(H): c_max strictly below h_crit, 0 at and above it.
constexpr double swarm_coefficient(double h, const ModelParams& p) {
  return h < p.h_crit ? p.c_max : 0.0;
}

/// A(H), linear between A(0) = a_d and A(1) = a_w. H is clamped into [0,1].
constexpr double threshold_age(double h, const ModelParams& p) {
  const double hc = h < 0.0 ? 0.0 : (h > 1.0 ? 1.0 : h);
  return p.a_d + (p.a_w - p.a_d) * hc;
}

/// Biomass carried per unit cohort density in age cell k (per unit length):
/// (e^{kΔa/τ} - e^{(k-1)Δa/τ})·τ.
inline double biomass_weight(std::size_t k, double da, double tau) {
  if (k == 0) throw InvalidArgument("k", "cohort index must be >= 1");
  const double kk = static_cast<double>(k);
  return (std::exp(kk * da / tau) - std::exp((kk - 1.0) * da / tau)) * tau;
}

/// weights[k] for k = 0..k_max+1; weights[0] is unused and set to 0.
inline std::vector<double> biomass_weights(std::size_t k_max, double da, double tau) {
  std::vector<double> w(k_max + 2, 0.0);
  for (std::size_t k = 1; k < w.size(); ++k) w[k] = biomass_weight(k, da, tau);
  return w;
}

/// Dormant cohort (k, p) is alive while (p - 1/2)Δb <= κ (k - 1/2)Δa.
constexpr bool dormant_alive(std::size_t k, std::size_t p, double da, double db, double kappa) {
  return (static_cast<double>(p) - 0.5) * db <= kappa * (static_cast<double>(k) - 0.5) * da;
}

/// Largest live dormancy index for elongation cohort k.
inline std::size_t last_live_p(std::size_t k, double da, double db, double kappa) {
  const double guess = std::floor(kappa * (static_cast<double>(k) - 0.5) * da / db + 0.5);
  std::size_t p = guess > 1.0 ? static_cast<std::size_t>(guess) - 1 : 0;
  while (p > 0 && !dormant_alive(k, p, da, db, kappa)) --p;
  while (dormant_alive(k, p + 1, da, db, kappa)) ++p;
  return p;
}

}  // namespace swarm
