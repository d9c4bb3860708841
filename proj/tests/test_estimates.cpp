#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace pxlap;

TEST(TruncEnergy, ZeroTrajectory) {
  auto s = testkit::regime_a_problem(4, 0.2);
  EXPECT_EQ(trunc_energy(zero_trajectory(s, 2.0, 4, 0.5, 1.0), 1.0), 0.0);
}

TEST(TruncEnergy, InactiveTruncationIsFullModular) {
  auto s = testkit::regime_a_problem(5, 0.2);
  const auto tr = run_rothe(s, 4.0, 5);
  const double big = sup_time_norm(tr.states, std::numeric_limits<double>::infinity()) + 1.0;
  EXPECT_NEAR(trunc_energy(tr, big), gradient_modular(tr), 1e-14 * gradient_modular(tr));
}

TEST(TruncEnergy, NondecreasingAndFlatAboveMax) {
  auto s = testkit::regime_a_problem(5, 0.2);
  const auto tr = run_rothe(s, 4.0, 5);
  const double wmax = sup_time_norm(tr.states, std::numeric_limits<double>::infinity());
  double prev = 0.0;
  for (double k : {0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
    const double e = trunc_energy(tr, k);
    EXPECT_GE(e, prev);
    prev = e;
  }
  EXPECT_EQ(trunc_energy(tr, wmax), trunc_energy(tr, 2.0 * wmax + 1.0));
  EXPECT_THROW(trunc_energy(tr, 0.0), ConfigError);
}

TEST(TruncEnergy, HeatRatiosBounded) {
  auto s = testkit::heat_problem(testkit::unit_square(8), 0.0, 0.2);
  s->beta = 0.0;
  s->u0 *= 2.5;
  const auto tr = run_rothe(s, 8.0, 8);
  const double base = trunc_energy(tr, 0.25) / 0.25;
  for (double k : {0.5, 1.0, 2.0}) EXPECT_LE(trunc_energy(tr, k) / k, 2.0 * base);
}

TEST(GagliardoNirenberg, ClosedForms) {
  const auto a = gn_exponents(2.2, 3.0, 3, 2.0);
  EXPECT_NEAR(a.E, 0.46875, 1e-14);
  EXPECT_NEAR(a.B, 1.34375, 1e-14);
  for (double rho : {0.0, 1.0, 5.0}) {
    const auto b = gn_exponents(2.0, 2.0, 3, rho);
    EXPECT_EQ(b.E, 0.0);
    EXPECT_NEAR(b.B, 1.0, 1e-15);
    const auto c = gn_exponents(2.5, 2.5, 3, rho);
    EXPECT_NEAR(c.B, (2.5 + rho) / (2.0 + rho), 1e-15);
  }
  EXPECT_THROW(gn_exponents(2.0, 5.0, 3, 0.0), DomainError);
}

TEST(GagliardoNirenberg, BAtLeastOneOnAdmissibleRange) {
  auto rng = oracle::rng(81);
  std::uniform_real_distribution<double> P(1.1, 4.0), Q(2.0, 6.0), R(0.0, 6.0);
  std::uniform_int_distribution<int> Nd(1, 5);
  int tested = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const double p = P(rng), q = Q(rng), rho = R(rng);
    const auto N = static_cast<std::size_t>(Nd(rng));
    if (!(p * (1.0 + (2.0 + rho) / static_cast<double>(N)) - q > 0.0)) continue;
    EXPECT_GE(gn_exponents(p, q, N, rho).B, 1.0 - 1e-14) << p << ' ' << q << ' ' << N << ' ' << rho;
    ++tested;
  }
  EXPECT_GT(tested, 1000);
}

TEST(Ledger, ZeroTrajectoryIsAllZero) {
  auto s = testkit::regime_a_problem(4, 0.2);
  const auto L = ledger(zero_trajectory(s, 2.0, 4, 0.5, 1.0), 2.0, {0.05}, {0.5, 1.0});
  EXPECT_EQ(L.sup_L1, 0.0);
  EXPECT_EQ(L.sup_Lr, 0.0);
  EXPECT_EQ(L.sup_Linf, 0.0);
  EXPECT_EQ(L.tail_Linf[0].second, 0.0);
  for (const auto& [k, v] : L.trunc_energy) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(L.gradient_modular, 0.0);
}

TEST(Ledger, SingleNodeTrajectory) {
  auto s = std::make_shared<ProblemSpec>();
  s->grid = testkit::unit_interval(2);
  s->g = Eigen::Vector3d::Zero();
  s->u0 = Eigen::Vector3d::Zero();
  s->f = zero_forcing();
  s->T = 0.2;
  Trajectory tr = zero_trajectory(s, 1.0, 2, 0.0, 1.0);
  tr.states.slices[0][1] = 1.0;
  tr.states.slices[1][1] = 0.5;
  tr.states.slices[2][1] = 0.25;
  const auto L = ledger(tr, 2.0, {tr.time(1) - 1e-12, tr.time(1)});
  EXPECT_DOUBLE_EQ(L.sup_L1, s->grid->cell_measure() * 1.0);
  EXPECT_EQ(L.tail_Linf[0].second, 0.5);
  EXPECT_EQ(L.tail_Linf[1].second, 0.25);
}

TEST(Ledger, EntriesFiniteNonnegativeAndHolderConsistent) {
  auto s = testkit::regime_a_problem(6, 0.2);
  s->r = 3.0;
  const auto tr = run_rothe(s, 4.0, 6);
  const auto L = ledger(tr, s->r, {0.05, 0.1}, {1.0, 0.25, 0.5});
  const double measure = s->grid->measure();
  EXPECT_LE(L.sup_L1, std::pow(measure, 1.0 - 1.0 / s->r) * L.sup_Lr * (1.0 + 1e-10));
  for (double v : {L.sup_L1, L.sup_Lr, L.sup_Linf, L.gradient_modular, L.weighted_time_derivative, L.interpolant_gap}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
  ASSERT_EQ(L.trunc_energy.size(), 3u);
  EXPECT_EQ(L.trunc_energy[0].first, 0.25);
  for (std::size_t i = 1; i < L.trunc_energy.size(); ++i)
    EXPECT_GE(L.trunc_energy[i].second, L.trunc_energy[i - 1].second);
  EXPECT_EQ(L.newton.steps, 6u);

  std::ostringstream os;
  write_ledger_csv(L, os);
  EXPECT_EQ(os.str().rfind("quantity,k_or_eta,value\n", 0), 0u);
}

namespace {
TestFunction bump(double T, double c = 1.0) {
  return [T, c](const Point& x, double t) {
    return c * std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]) * (T - t);
  };
}
}  // namespace

TEST(WeakForm, ZeroTestFunction) {
  auto s = testkit::regime_a_problem(5, 0.2);
  const auto tr = run_rothe(s, 4.0, 5);
  EXPECT_EQ(weak_form_residual(tr, [](const Point&, double) { return 0.0; }), 0.0);
}

TEST(WeakForm, ZeroDataZeroTrajectory) {
  auto s = testkit::regime_a_problem(5, 0.2);
  s->u0.setZero();
  s->g.setZero();
  s->f = zero_forcing();
  const auto tr = run_rothe(s, 4.0, 5);
  EXPECT_EQ(weak_form_residual(tr, bump(0.2)), 0.0);
}

TEST(WeakForm, ConvergedTrajectoriesHaveSmallResidual) {
  auto heat = testkit::heat_problem(testkit::unit_square(8), 0.3, 0.2);
  EXPECT_LT(std::abs(weak_form_residual(run_rothe(heat, 4.0, 8), bump(0.2))), 1e-7);
  auto a = testkit::regime_a_problem(8, 0.2);
  EXPECT_LT(std::abs(weak_form_residual(run_rothe(a, 4.0, 8), bump(0.2))), 1e-7);
  LadderOptions lo;
  const auto ladder = run_monotone(a, 4.0, 8, lo);
  ASSERT_TRUE(ladder.converged);
  EXPECT_LT(std::abs(weak_form_residual(ladder.limit(), bump(0.2))), 1e-7);
}

TEST(WeakForm, LinearInTestFunction) {
  auto s = testkit::regime_a_problem(6, 0.2);
  const auto tr = run_rothe(s, 4.0, 6);
  // A test function far from the solution's own equation so the residual is not round-off.
  const auto phi = [](double c) {
    return [c](const Point& x, double t) { return c * x[0] * (1 - x[0]) * x[1] * (1 - x[1]) * (0.2 - t) * (1 + 5 * x[0]); };
  };
  Trajectory perturbed = tr;
  perturbed.states.slices[3] *= 1.1;
  const double r1 = weak_form_residual(perturbed, phi(1.0));
  const double r3 = weak_form_residual(perturbed, phi(-3.0));
  EXPECT_GT(std::abs(r1), 1e-6);
  EXPECT_NEAR(r3, -3.0 * r1, 1e-10 * std::abs(3.0 * r1));
}

TEST(WeakForm, InadmissibleTestFunctionsRejected) {
  auto s = testkit::regime_a_problem(4, 0.2);
  const auto tr = run_rothe(s, 2.0, 4);
  EXPECT_THROW(weak_form_residual(tr, [](const Point&, double t) { return 0.2 - t; }), ConfigError);
  EXPECT_THROW(weak_form_residual(tr, [](const Point& x, double) { return std::sin(std::numbers::pi * x[0]) *
                                                                          std::sin(std::numbers::pi * x[1]); }),
               ConfigError);
}
