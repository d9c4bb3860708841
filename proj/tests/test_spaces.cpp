#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace pxlap;

// ---------------------------------------------------------------- grid and fields

TEST(Grid, CountsAndWeights) {
  const auto g = make_grid({{0.0, 2.0}, {0.0, 1.0}}, {4, 2});
  EXPECT_EQ(g->node_count(), 15u);
  EXPECT_EQ(g->edge_count(), 4u * 3u + 5u * 2u);
  EXPECT_DOUBLE_EQ(g->cell_measure(), 0.25);
  double total = 0.0;
  for (std::size_t i = 0; i < g->node_count(); ++i) total += g->node_weight(i);
  EXPECT_NEAR(total, 2.0, 1e-14);
  EXPECT_EQ(g->interior_nodes().size(), 3u);
}

TEST(Grid, EdgeWeightsIntegrateConstantsPerAxis) {
  const auto g = make_grid({{0.0, 1.0}, {0.0, 3.0}, {0.0, 2.0}}, {2, 3, 4});
  std::vector<double> per_axis(3, 0.0);
  for (std::size_t e = 0; e < g->edge_count(); ++e) per_axis[g->edges()[e].axis] += g->edge_weight(e);
  for (double w : per_axis) EXPECT_NEAR(w, g->measure(), 1e-13);
}

TEST(Grid, RejectsDegenerateInput) {
  EXPECT_THROW(make_grid({{0.0, 1.0}}, {1}), ConfigError);
  EXPECT_THROW(make_grid({{1.0, 1.0}}, {4}), ConfigError);
  EXPECT_THROW(make_grid({}, {}), ConfigError);
}

TEST(ExponentBounds, Constant) {
  const auto g = testkit::unit_interval(4);
  const auto [lo, hi] = exponent_bounds(ExponentField::constant(2.2), *g);
  EXPECT_EQ(lo, 2.2);
  EXPECT_EQ(hi, 2.2);
}

TEST(ExponentBounds, AffineHitsEndpoints) {
  const auto g = testkit::unit_interval(10);
  const auto [lo, hi] = exponent_bounds(ExponentField::affine(1.8, {0.2}), *g);
  EXPECT_DOUBLE_EQ(lo, 1.8);
  EXPECT_DOUBLE_EQ(hi, 2.0);
}

TEST(ExponentBounds, Table) {
  const auto g = testkit::unit_interval(2);
  const auto [lo, hi] = exponent_bounds(ExponentField::table({1.9, 2.4, 2.1}), *g);
  EXPECT_EQ(lo, 1.9);
  EXPECT_EQ(hi, 2.4);
}

TEST(ExponentBounds, TableOfWrongLengthIsConfigError) {
  const auto g = testkit::unit_interval(4);
  EXPECT_THROW(exponent_bounds(ExponentField::table({1.9, 2.4, 2.1}), *g), ConfigError);
}

TEST(ExponentField, TableEdgeValueIsNodeAverage) {
  const auto g = testkit::unit_interval(2);
  const Eigen::VectorXd e = ExponentField::table({2.0, 3.0, 2.5}).sample_edges(*g);
  EXPECT_DOUBLE_EQ(e[0], 2.5);
  EXPECT_DOUBLE_EQ(e[1], 2.75);
}

// ---------------------------------------------------------------- hypotheses

namespace {
ProblemSpec spec_with(std::size_t N, double p, double q, double delta = 0.5, double r = 2.0) {
  ProblemSpec s;
  std::vector<std::pair<double, double>> box(N, {0.0, 1.0});
  s.grid = make_grid(box, std::vector<std::size_t>(N, 2));
  s.p = ExponentField::constant(p);
  s.q = ExponentField::constant(q);
  s.delta = ExponentField::constant(delta);
  s.g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.grid->node_count()));
  s.u0 = s.g;
  s.f = zero_forcing();
  s.r = r;
  return s;
}
}  // namespace

TEST(HypothesesA, TwoDimensionalSubquadraticPasses) {
  const auto rep = validate_hypotheses_A(spec_with(2, 1.8, 2.0));
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.checks.size(), 3u);
  EXPECT_NEAR(rep.checks[0].lhs, 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(rep.checks[2].rhs, 1.8 + 1.0 / 3.0, 1e-15);
}

TEST(HypothesesA, ExponentAboveDimensionFails) {
  const auto rep = validate_hypotheses_A(spec_with(2, 2.5, 2.0));
  ASSERT_FALSE(rep.passed());
  EXPECT_EQ(rep.first_failure()->name, "A1: p+ < N");
}

TEST(HypothesesA, PowerTooLargeFails) {
  const auto rep = validate_hypotheses_A(spec_with(3, 2.2, 2.5));
  ASSERT_FALSE(rep.passed());
  EXPECT_EQ(rep.first_failure()->name, "A2: q+ < p- + 1/(N+1)");
  EXPECT_NEAR(rep.first_failure()->rhs, 2.45, 1e-15);
}

TEST(HypothesesA, OneDimensionIsFlagged) {
  const auto rep = validate_hypotheses_A(spec_with(1, 1.8, 2.0));
  EXPECT_TRUE(rep.outside_theory);
}

TEST(HypothesesB, ThreeDimensionalCasePasses) {
  const auto rep = validate_hypotheses_B(spec_with(3, 2.2, 3.0, 1.5, 4.0));
  EXPECT_TRUE(rep.passed()) << rep.to_string();
  EXPECT_NEAR(rep.checks[3].rhs, 8.25, 1e-12);
  EXPECT_NEAR(rep.checks[4].rhs, 2.2 * (1.0 + 4.0 / 3.0), 1e-12);
}

TEST(HypothesesB, BoundaryIntegrabilityFails) {
  const auto rep = validate_hypotheses_B(spec_with(3, 2.2, 3.0, 1.5, 3.0));
  ASSERT_FALSE(rep.passed());
  EXPECT_EQ(rep.first_failure()->name, "B4: r > max{q+, delta+ + 1}");
}

TEST(HypothesesB, SupercriticalPowerFails) {
  const auto rep = validate_hypotheses_B(spec_with(3, 2.2, 9.0, 1.5, 10.0));
  ASSERT_FALSE(rep.passed());
  EXPECT_EQ(rep.first_failure()->name, "B2: q(x) < p*(x)");
}

TEST(HypothesesB, UndefinedCriticalExponentNamesNode) {
  auto s = spec_with(3, 2.2, 3.0, 1.5, 4.0);
  s.p = ExponentField::affine(2.2, {1.0});  // reaches 3.2 >= N at x = 1
  const auto rep = validate_hypotheses_B(s);
  ASSERT_FALSE(rep.passed());
  const auto& c = rep.checks[3];
  EXPECT_FALSE(c.satisfied);
  ASSERT_TRUE(c.node.has_value());
  EXPECT_GE(s.p.at_node(*s.grid, *c.node), 3.0);
}

TEST(Hypotheses, ValidatorsArePure) {
  const auto s = spec_with(3, 2.2, 2.5);
  const auto a = validate_hypotheses_A(s).to_string();
  EXPECT_EQ(a, validate_hypotheses_A(s).to_string());
}

TEST(Hypotheses, RegimeAImpliesShiftedExponentAboveOne) {
  auto rng = oracle::rng(11);
  std::uniform_real_distribution<double> U(1.0, 4.0);
  int accepted = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t N = 2 + static_cast<std::size_t>(trial % 2);
    const double p = U(rng);
    const double q = U(rng);
    const auto s = spec_with(N, p, q);
    if (!validate_hypotheses_A(s).passed()) continue;
    ++accepted;
    EXPECT_GT(p - static_cast<double>(N) / (static_cast<double>(N) + 1.0), 1.0);
  }
  EXPECT_GT(accepted, 0);
}

TEST(ProblemSpec, RejectsNegativeData) {
  auto s = spec_with(2, 1.8, 2.0);
  s.g[4] = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec_with(2, 1.8, 2.0);
  s.lambda = -0.1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec_with(2, 1.8, 2.0);
  s.p = ExponentField::constant(1.0);
  EXPECT_THROW(s.validate(), ConfigError);
}

// ---------------------------------------------------------------- truncations

TEST(Truncation, ClampExamples) {
  EXPECT_EQ(truncate(5.0, 2.0), 2.0);
  EXPECT_EQ(truncate(-5.0, 2.0), -2.0);
  EXPECT_EQ(truncate(1.0, 2.0), 1.0);
}

TEST(Truncation, LevelPartExamples) {
  EXPECT_EQ(level_part(5.0, 2.0), 3.0);
  EXPECT_EQ(level_part(1.0, 2.0), 0.0);
  EXPECT_EQ(level_part(-3.0, 2.0), -1.0);
}

TEST(Truncation, PrimitiveClosedForm) {
  EXPECT_DOUBLE_EQ(truncation_primitive(2.0, 1.0, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(truncation_primitive(0.5, 1.0, 1.0), 0.125);
  EXPECT_NEAR(truncation_primitive(3.0, 2.0, 2.0), 20.0 / 3.0, 1e-14);
}

TEST(Truncation, PrimitiveAgreesWithQuadrature) {
  for (double k : {0.5, 1.0, 2.0})
    for (double gamma : {0.3, 1.0, 2.5})
      for (double s : {0.0, 0.2, 0.5, 1.7, 3.0, 6.5}) {
        const double q = oracle::integrate([&](double t) { return std::pow(std::min(t, k), gamma); }, 0.0, s);
        EXPECT_NEAR(truncation_primitive(s, k, gamma), q, 1e-10 * std::max(1.0, q)) << k << ' ' << gamma << ' ' << s;
      }
}

TEST(Truncation, CutoffExamples) {
  EXPECT_EQ(cutoff_V(0.3, 0.5), 1.0);
  EXPECT_NEAR(cutoff_V(0.7, 0.5), 0.6, 1e-15);
  EXPECT_EQ(cutoff_V(1.2, 0.5), 0.0);
}

TEST(Truncation, PowerTruncationExamples) {
  EXPECT_EQ(power_truncation(5.0, 3.0, 2.0), 2.0);
  EXPECT_EQ(power_truncation(2.0, 3.0, 10.0), 4.0);
  EXPECT_EQ(power_truncation(0.0, 3.0, 10.0), 0.0);
}

TEST(TruncationProperties, DecompositionClampAndLipschitz) {
  auto rng = oracle::rng(21);
  std::uniform_real_distribution<double> S(-10.0, 10.0), K(0.01, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const double s = S(rng), t = S(rng), k = K(rng);
    EXPECT_DOUBLE_EQ(truncate(s, k) + level_part(s, k), s);
    EXPECT_LE(std::abs(truncate(s, k)), std::min(std::abs(s), k));
    EXPECT_LE(std::abs(truncate(s, k) - truncate(t, k)), std::abs(s - t));
    if (s <= t) {
      EXPECT_LE(truncate(s, k), truncate(t, k));
    }
  }
}

TEST(TruncationProperties, PrimitiveOfUnitLevelDominatesShift) {
  auto rng = oracle::rng(22);
  std::uniform_real_distribution<double> S(0.0, 20.0), G(0.05, 4.0);
  for (int i = 0; i < 2000; ++i) {
    const double s = S(rng), gamma = G(rng);
    EXPECT_GE(truncation_primitive(s, 1.0, gamma), s - 1.0 - 1e-14);
  }
}

TEST(TruncationProperties, CutoffShape) {
  auto rng = oracle::rng(23);
  std::uniform_real_distribution<double> S(0.0, 5.0), G(0.05, 2.0);
  for (int i = 0; i < 2000; ++i) {
    const double gamma = G(rng), s = S(rng), t = S(rng);
    const double v = cutoff_V(s, gamma);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (s <= t) {
      EXPECT_GE(v, cutoff_V(t, gamma));
    }
    if (s <= gamma) {
      EXPECT_EQ(v, 1.0);
    }
    if (s >= 2.0 * gamma) {
      EXPECT_EQ(v, 0.0);
    }
  }
  for (double gamma : {0.1, 1.0, 3.0}) {
    EXPECT_NEAR(cutoff_V(gamma + 1e-12, gamma), 1.0, 1e-10);
    EXPECT_NEAR(cutoff_V(2.0 * gamma - 1e-12, gamma), 0.0, 1e-10);
  }
}

TEST(TruncationProperties, PowerTruncationMonotoneAndConvergent) {
  auto rng = oracle::rng(24);
  std::uniform_real_distribution<double> W(0.0, 6.0), Q(1.05, 4.0);
  for (int i = 0; i < 2000; ++i) {
    const double w = W(rng), w2 = W(rng), q = Q(rng);
    for (double n : {1.0, 2.0, 8.0}) {
      const double h = power_truncation(w, q, n);
      EXPECT_LE(h, std::min(n, std::pow(w, q - 1.0)) + 1e-15);
      EXPECT_LE(h, power_truncation(w, q, 2.0 * n));
      if (w <= w2) {
        EXPECT_LE(h, power_truncation(w2, q, n));
      }
    }
    EXPECT_DOUBLE_EQ(power_truncation(w, q, 1e12), std::pow(w, q - 1.0));
  }
}

TEST(SingularTerm, NondecreasingInRegularizationIndex) {
  auto rng = oracle::rng(25);
  std::uniform_real_distribution<double> W(0.0, 3.0), D(0.1, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double w = W(rng), d = D(rng);
    double prev = 0.0;
    for (double n : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      const double v = std::pow(w + 1.0 / n, -d);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

// ---------------------------------------------------------------- modular and norms

TEST(Modular, Examples) {
  const auto g = testkit::unit_interval(8);
  const Eigen::VectorXd two = Eigen::VectorXd::Constant(9, 2.0);
  EXPECT_NEAR(modular_rho(GridFunction(g, two), ExponentField::constant(2.0)), 4.0, 1e-14);
  EXPECT_EQ(modular_rho(GridFunction(g, Eigen::VectorXd::Zero(9)), ExponentField::constant(2.0)), 0.0);
  EXPECT_NEAR(modular_rho(GridFunction(g, Eigen::VectorXd::Ones(9)), ExponentField::affine(1.5, {2.0})), 1.0, 1e-14);
}

TEST(Luxemburg, ConstantExponentExamples) {
  const auto g = testkit::unit_interval(8);
  EXPECT_NEAR(luxemburg_norm(GridFunction(g, Eigen::VectorXd::Constant(9, 3.0)), ExponentField::constant(2.0)), 3.0,
              1e-12);
  EXPECT_EQ(luxemburg_norm(GridFunction(g, Eigen::VectorXd::Zero(9)), ExponentField::constant(2.0)), 0.0);
}

TEST(Luxemburg, PiecewiseExponentOfConstant) {
  const auto g = testkit::unit_interval(8);
  const auto p = ExponentField::function([](const Point& x) { return x[0] < 0.5 ? 2.0 : 3.0; });
  for (double c : {0.3, 1.0, 7.0})
    EXPECT_NEAR(luxemburg_norm(GridFunction(g, Eigen::VectorXd::Constant(9, c)), p), c, 1e-12 * c);
}

TEST(Luxemburg, RandomEightNodeAgainstBisectionOracle) {
  const auto g = testkit::unit_interval(7);
  auto rng = oracle::rng(31);
  std::uniform_real_distribution<double> U(-3.0, 3.0), P(1.2, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd u(8);
    std::vector<double> pv(8), uv(8), wv(8);
    for (int i = 0; i < 8; ++i) {
      u[i] = U(rng);
      pv[static_cast<std::size_t>(i)] = P(rng);
      uv[static_cast<std::size_t>(i)] = u[i];
      wv[static_cast<std::size_t>(i)] = (i == 0 || i == 7) ? g->spacing(0) / 2.0 : g->spacing(0);
    }
    const auto p = ExponentField::table(pv);
    const double mu = luxemburg_norm(GridFunction(g, u), p);
    EXPECT_LT(std::abs(modular_rho(GridFunction(g, u / mu), p) - 1.0), 1e-10);
    EXPECT_NEAR(mu, oracle::luxemburg(uv, pv, wv), 1e-11 * mu);
  }
}

TEST(Lebesgue, Examples) {
  const auto g = testkit::unit_interval(8);
  EXPECT_NEAR(lebesgue_norm(*g, Eigen::VectorXd::Ones(9), 1.0), 1.0, 1e-14);
  EXPECT_NEAR(lebesgue_norm(*g, Eigen::VectorXd::Constant(9, 2.0), 3.0), 2.0, 1e-14);
  SpaceTimeSamples s{g, 0.1, {Eigen::VectorXd::Constant(9, 2.0), Eigen::VectorXd::Constant(9, 2.0)}};
  EXPECT_EQ(sup_time_norm(s, 3.0), lebesgue_norm(*g, Eigen::VectorXd::Constant(9, 2.0), 3.0));
}

namespace {
struct RandomField {
  Eigen::VectorXd u;
  ExponentField p = ExponentField::constant(2.0);
};

RandomField random_field(const Grid& grid, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(1.1, 4.5);
  RandomField f;
  f.u = Eigen::VectorXd(static_cast<Eigen::Index>(grid.node_count()));
  std::vector<double> pv(grid.node_count());
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    f.u[static_cast<Eigen::Index>(i)] = scale * U(rng);
    pv[i] = P(rng);
  }
  f.p = ExponentField::table(pv);
  return f;
}
}  // namespace

TEST(NormProperties, NormModularInequality) {
  const auto g = testkit::unit_square(6);
  auto rng = oracle::rng(41);
  std::uniform_real_distribution<double> Scale(0.05, 20.0);
  int tested = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto f = random_field(*g, rng, Scale(rng));
    const GridFunction u(g, f.u);
    const double norm = luxemburg_norm(u, f.p);
    if (std::abs(norm - 1.0) < 1e-3) continue;
    const auto [pm, pp] = exponent_bounds(f.p, *g);
    const double rho = modular_rho(u, f.p);
    if (norm > 1.0) {
      EXPECT_LE(std::pow(norm, pm), rho * (1 + 1e-12));
      EXPECT_LE(rho, std::pow(norm, pp) * (1 + 1e-12));
    } else {
      EXPECT_LE(std::pow(norm, pp), rho * (1 + 1e-12));
      EXPECT_LE(rho, std::pow(norm, pm) * (1 + 1e-12));
    }
    ++tested;
  }
  EXPECT_GT(tested, 250);
}

TEST(NormProperties, UnitBallIdentityAndHomogeneity) {
  const auto g = make_grid({{0.0, 2.0}, {-1.0, 1.0}}, {5, 4});
  auto rng = oracle::rng(42);
  std::uniform_real_distribution<double> Scale(0.01, 50.0), C(-9.0, 9.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_field(*g, rng, Scale(rng));
    const GridFunction u(g, f.u);
    const double norm = luxemburg_norm(u, f.p);
    EXPECT_LT(std::abs(modular_rho(GridFunction(g, f.u / norm), f.p) - 1.0), 1e-10);
    const double c = C(rng);
    EXPECT_NEAR(luxemburg_norm(GridFunction(g, c * f.u), f.p), std::abs(c) * norm, 1e-10 * std::abs(c) * norm);
  }
}

TEST(NormProperties, ConstantExponentMatchesLebesgue) {
  const auto g = testkit::unit_square(5);
  auto rng = oracle::rng(43);
  std::uniform_real_distribution<double> U(-4.0, 4.0), P(1.1, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(g->node_count()));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = U(rng);
    const double p = P(rng);
    const double a = luxemburg_norm(GridFunction(g, u), ExponentField::constant(p));
    EXPECT_NEAR(a, lebesgue_norm(*g, u, p), 1e-10 * a);
  }
}

TEST(NormProperties, EdgeModularOfZeroAndPositivity) {
  const auto g = testkit::unit_square(4);
  EdgeField e{g, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g->edge_count()))};
  EXPECT_EQ(modular_rho(e, ExponentField::constant(1.7)), 0.0);
  e.values[3] = 0.5;
  EXPECT_GT(modular_rho(e, ExponentField::constant(1.7)), 0.0);
  EXPECT_GT(luxemburg_norm(e, ExponentField::constant(1.7)), 0.0);
}

TEST(SpaceTime, L1DistanceRightEndpoint) {
  const auto g = testkit::unit_interval(2);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3), one(3);
  one << 0.0, 1.0, 0.0;
  SpaceTimeSamples a{g, 0.25, {one, one, z}}, b{g, 0.25, {z, z, z}};
  EXPECT_NEAR(space_time_l1_distance(a, b), 0.25 * 0.5, 1e-15);
  SpaceTimeSamples c{g, 0.5, {z, z, z}};
  EXPECT_THROW(space_time_l1_distance(a, c), ConfigError);
}
