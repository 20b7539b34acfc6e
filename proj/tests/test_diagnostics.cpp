#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "random_state.hpp"
#include "swarm/diagnostics.hpp"
#include "swarm/scheme.hpp"

using namespace swarm;
using swarm::testing::random_state;
using swarm::testing::RandomStateOptions;

namespace {

ModelParams gentle_params() {
  ModelParams p;
  p.q_bar = 0.05;
  p.c_max = 0.02;
  return p;
}

// Brute-force B: every stored cohort, ghost rows of ρ included, plus Q and D.
double brute_total(const ColonyState& s, const ModelParams& p, const GridSpec& g) {
  const double da = g.age_step();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    acc += s.q[i] + s.d_buf[i];
    for (std::size_t k = 1; k <= g.k_max; ++k) {
      const double kk = static_cast<double>(k);
      const double w = std::exp(kk * da / p.tau) * (1.0 - std::exp(-da / p.tau)) * p.tau;
      acc += w * s.zeta(k, i);
      for (std::size_t pp = 0; pp <= g.p_max; ++pp) acc += w * s.rho(k, pp, i);
    }
  }
  return g.dx * acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ledger

TEST(TotalBiomass, MatchesBruteForce) {
  const auto p = gentle_params();
  const auto g = make_grid(p, 0.2, 0.15, 1);
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_state(p, g, rng);
    const double b = brute_total(s, p, g);
    EXPECT_NEAR(total_biomass(s, p, g), b, 1e-13 * b);
  }
}

TEST(Ledger, EmptyColonyIsAllZero) {
  ModelParams p;
  const auto g = make_grid(p, 0.04, 0.15, 1);
  ColonyState s(g.n_cells, g.k_max, g.p_max);
  const ColonyState before = s;
  const auto r = step(s, p, g);
  const auto l = evaluate_ledger(before, s, r, p, g);
  EXPECT_EQ(l.b_previous, 0.0);
  EXPECT_EQ(l.b_total, 0.0);
  EXPECT_EQ(l.division_source, 0.0);
  EXPECT_EQ(l.elongation_growth, 0.0);
  EXPECT_EQ(l.boundary_outflux, 0.0);
  EXPECT_EQ(l.residual, 0.0);
  EXPECT_EQ(l.relative_residual, 0.0);
}

TEST(Ledger, FirstStepOfDividingColony) {
  ModelParams p;
  p.q_bar = 0.05;
  const auto g = make_grid(p, 0.04, 0.15, 1);
  InitialConditions ic;
  ic.q0 = {{0.0, 0.6, 0.1}};
  ic.h0 = 0.7;
  ColonyState s = init_state(p, g, ic);
  const ColonyState before = s;
  const auto r = step(s, p, g);
  const auto l = evaluate_ledger(before, s, r, p, g);
  EXPECT_NEAR(l.division_source, 0.15 * 4 * 0.04 * 0.1, 1e-16);
  EXPECT_EQ(l.elongation_growth, 0.0);
  EXPECT_LE(l.relative_residual, 1e-12);
  EXPECT_NEAR(l.b_total, 0.15 * 4 * 0.1 * 1.04, 1e-15);
}

TEST(Ledger, PureAdvectionClosesExactly) {
  ModelParams p;
  p.q_bar = 10.0;  // no division anywhere
  p.c_max = 0.05;
  const auto g = make_grid(p, 0.2, 0.15, 1);
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    ColonyState s = random_state(p, g, rng, {.cohort_hi = 1e-3, .elongating = false});
    const ColonyState before = s;
    const auto r = step(s, p, g);
    const auto l = evaluate_ledger(before, s, r, p, g);
    EXPECT_EQ(l.division_source, 0.0);
    EXPECT_EQ(l.elongation_growth, 0.0);
    EXPECT_LE(l.relative_residual, 1e-14);
  }
}

TEST(Ledger, ClosesOnRandomTrajectories) {
  const auto p = gentle_params();
  for (std::size_t nu : {1u, 2u, 4u}) {
    const auto g = make_grid(p, 0.2 / static_cast<double>(nu), 0.15, 1, nu);
    std::mt19937_64 rng(53 + nu);
    ColonyState s = random_state(p, g, rng, {.cohort_hi = 1e-3});
    DerivedFields d = compute_derived(s, p, g);
    double worst = 0.0;
    for (int n = 0; n < 120; ++n) {
      const ColonyState before = s;
      const auto r = advance(s, p, g, {}, d);
      const auto l = evaluate_ledger(before, s, r, p, g);
      EXPECT_NEAR(l.b_total, brute_total(s, p, g), 1e-12 * l.b_total);
      worst = std::max(worst, l.relative_residual);
    }
    EXPECT_LE(worst, 1e-12) << "nu = " << nu;
  }
}

TEST(Ledger, ScaledFeedLosesBiomass) {
  ModelParams p;
  const auto g = make_grid(p, 0.04, 0.15, 1);
  ColonyState s(g.n_cells, g.k_max, g.p_max);
  s.d_buf[0] = 0.5;
  const ColonyState before = s;
  SchemeOptions opt;
  opt.feed = DedifferentiationFeed::scaled_by_dt;
  const auto r = step(s, p, g, opt);
  const auto l = evaluate_ledger(before, s, r, p, g);
  EXPECT_NEAR(l.residual, -0.15 * 0.5 * (1.0 - 0.04), 1e-15);
}

TEST(Ledger, RejectsNonConsecutiveStates) {
  ModelParams p;
  const auto g = make_grid(p, 0.04, 0.15, 1);
  ColonyState s(g.n_cells, g.k_max, g.p_max);
  const ColonyState before = s;
  step(s, p, g);
  const auto r = step(s, p, g);
  EXPECT_THROW(evaluate_ledger(before, s, r, p, g), InvalidArgument);
}

TEST(Ledger, RelativeResidualDefinition) {
  ModelParams p;
  const auto g = make_grid(p, 0.04, 0.15, 1);
  LedgerBaseline base;
  base.b_total = 1.0;
  ColonyState after(g.n_cells, g.k_max, g.p_max);
  after.step_index = 1;
  StepReport r;
  const auto l = close_ledger(base, after, r, p, g);
  EXPECT_EQ(l.residual, -1.0);
  EXPECT_EQ(l.relative_residual, 1.0 / kLedgerFloor);
}

// ---------------------------------------------------------------------------
// L2 thickness difference

TEST(L2Diff, IdenticalProfilesGiveZero) {
  ThicknessProfile a{25.0, 0.15, {0.1, 0.5, 0.3}};
  EXPECT_EQ(l2_thickness_diff(a, a, 0.45), 0.0);
}

TEST(L2Diff, HandValue) {
  ThicknessProfile a{25.0, 0.15, {0.1, 0.5, 0.3}};
  ThicknessProfile b{25.0, 0.15, {0.4, 0.5, -0.1}};
  EXPECT_NEAR(l2_thickness_diff(a, b, 0.45), 0.15 / 0.45 * 0.5, 1e-15);
}

TEST(L2Diff, RejectsIncompatibleProfiles) {
  ThicknessProfile a{25.0, 0.15, {0.1, 0.5, 0.3}};
  ThicknessProfile b{25.0, 0.15, {0.1, 0.5}};
  EXPECT_THROW(l2_thickness_diff(a, b, 0.45), InvalidArgument);
  ThicknessProfile c{25.0, 0.1, {0.1, 0.5, 0.3}};
  EXPECT_THROW(l2_thickness_diff(a, c, 0.45), InvalidArgument);
  ThicknessProfile d{24.0, 0.15, {0.1, 0.5, 0.3}};
  EXPECT_THROW(l2_thickness_diff(a, d, 0.45), InvalidArgument);
}

TEST(L2Diff, IsAMetric) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  auto random_profile = [&] {
    ThicknessProfile t{25.0, 0.15, std::vector<double>(11)};
    for (auto& x : t.e) x = u(rng);
    return t;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_profile(), b = random_profile(), c = random_profile();
    const double ab = l2_thickness_diff(a, b, 1.65);
    EXPECT_EQ(ab, l2_thickness_diff(b, a, 1.65));
    EXPECT_GT(ab, 0.0);
    EXPECT_LE(ab, l2_thickness_diff(a, c, 1.65) + l2_thickness_diff(c, b, 1.65) + 1e-15);
  }
}

// ---------------------------------------------------------------------------
// Front

TEST(Front, EmptyProfileIsAtOrigin) {
  EXPECT_EQ(front_position(std::vector<double>(11, 0.0), 0.15), 0.0);
}

TEST(Front, InitialColonyOfFourCells) {
  std::vector<double> e(11, 0.0);
  for (std::size_t i = 0; i < 4; ++i) e[i] = 0.1;
  EXPECT_NEAR(front_position(e, 0.15), 0.6, 1e-15);
}

TEST(Front, RampAgainstThreshold) {
  const std::vector<double> e{0.01, 0.02, 0.03, 0.04};
  EXPECT_NEAR(front_position(e, 0.15, 0.035), 0.6, 1e-15);
  const std::vector<double> down{0.06, 0.05, 0.04, 0.03, 0.02};
  EXPECT_NEAR(front_position(down, 0.15, 0.035), 0.45, 1e-15);
}

TEST(Front, UsesLastOccupiedCell) {
  const std::vector<double> e{0.5, 0.0, 0.0, 0.2, 0.0};
  EXPECT_NEAR(front_position(e, 0.15), 0.6, 1e-15);
}

// ---------------------------------------------------------------------------
// Terraces

TEST(Terraces, MonotoneProfileHasNone) {
  EXPECT_EQ(count_terraces(std::vector<double>{1.0, 0.8, 0.5, 0.2, 0.0}), 0u);
  EXPECT_EQ(count_terraces(std::vector<double>{0.0, 0.2, 0.5}), 0u);
}

TEST(Terraces, TwoHumps) {
  EXPECT_EQ(count_terraces(std::vector<double>{0.2, 1.0, 0.4, 1.1, 0.1}, 0.05), 2u);
}

TEST(Terraces, ShallowDipMergesHumps) {
  EXPECT_EQ(count_terraces(std::vector<double>{0.2, 1.0, 0.98, 1.1, 0.1}, 0.05), 1u);
}

TEST(Terraces, PlateauCountsOnce) {
  EXPECT_EQ(count_terraces(std::vector<double>{0.0, 0.7, 0.7, 0.7, 0.1}, 0.05), 1u);
}

TEST(Terraces, ProminenceMeasuredAgainstHigherFlank) {
  // Right flank only drops by 0.03 before the profile ends.
  EXPECT_EQ(count_terraces(std::vector<double>{0.0, 1.0, 0.97}, 0.05), 0u);
  EXPECT_EQ(count_terraces(std::vector<double>{0.0, 1.0, 0.9}, 0.05), 1u);
}

TEST(Terraces, ScaleInvariant) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> e(30);
    for (auto& x : e) x = u(rng);
    for (double scale : {0.5, 2.0, 8.0}) {
      std::vector<double> f(e);
      for (auto& x : f) x *= scale;
      EXPECT_EQ(count_terraces(e, 0.1), count_terraces(f, 0.1 * scale));
    }
  }
}

// ---------------------------------------------------------------------------
// Phases

TEST(Phases, ConstantTraceIsOneConsolidation) {
  const auto t = segment_phases(std::vector<double>(50, 0.6), 0.075, 10);
  ASSERT_EQ(t.phases.size(), 1u);
  EXPECT_EQ(t.phases[0].kind, PhaseKind::consolidation);
  EXPECT_EQ(t.phases[0].start, 0u);
  EXPECT_EQ(t.phases[0].end, 49u);
}

TEST(Phases, IncreasingTraceIsOneSwarm) {
  std::vector<double> f(50);
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = 0.15 * static_cast<double>(j);
  const auto t = segment_phases(f, 0.075, 10);
  ASSERT_EQ(t.phases.size(), 1u);
  EXPECT_EQ(t.phases[0].kind, PhaseKind::swarm);
  EXPECT_EQ(t.phases[0].end, 49u);
}

TEST(Phases, StaircaseAlternates) {
  std::vector<double> f;
  double x = 0.6;
  for (int flat = 0; flat < 3; ++flat) {
    for (int j = 0; j < 20; ++j) f.push_back(x);
    for (int j = 0; j < 3; ++j) f.push_back(x += 0.15);
  }
  const auto t = segment_phases(f, 0.075, 10);
  std::size_t consolidations = 0;
  for (std::size_t j = 0; j < t.phases.size(); ++j) {
    if (t.phases[j].kind == PhaseKind::consolidation) ++consolidations;
    if (j > 0) {
      EXPECT_NE(t.phases[j].kind, t.phases[j - 1].kind);
    }
  }
  EXPECT_EQ(consolidations, 3u);
  EXPECT_EQ(t.retreats, 0u);
}

TEST(Phases, TileTheRun) {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<int> jump(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> f(300);
    double x = 0.0;
    for (auto& v : f) v = (x += jump(rng) == 0 ? 0.15 : 0.0);
    const auto t = segment_phases(f, 0.075, 8);
    ASSERT_FALSE(t.phases.empty());
    EXPECT_EQ(t.phases.front().start, 0u);
    EXPECT_EQ(t.phases.back().end, f.size() - 1);
    for (std::size_t j = 1; j < t.phases.size(); ++j)
      EXPECT_EQ(t.phases[j].start, t.phases[j - 1].end + 1);
    for (const auto& ph : t.phases) {
      if (ph.kind != PhaseKind::consolidation) continue;
      EXPECT_GE(ph.end - ph.start + 1, 8u);
      EXPECT_LE(f[ph.end] - f[ph.start], 0.075);
    }
  }
}

TEST(Phases, CountsRetreats) {
  const auto t = segment_phases(std::vector<double>{0.6, 0.6, 0.45, 0.6, 0.3}, 0.075, 1);
  EXPECT_EQ(t.retreats, 2u);
}
