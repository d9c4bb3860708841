#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pxlap/errors.hpp"
#include "pxlap/field.hpp"
#include "pxlap/grid.hpp"

namespace pxlap {

/// Space-time datum evaluated at (node index, time).
using SpaceTimeField = std::function<double(std::size_t node, double t)>;

/**
 * Which standing hypotheses a problem is meant to satisfy: A for the problem with
 * an L^1 forcing, B for the purely power + singular problem, none for desk-scale
 * runs (classical heat equation, 1D experiments) that sit outside both ranges.
 */
enum class Regime { A, B, none };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::A: return "A";
    case Regime::B: return "B";
    case Regime::none: return "none";
  }
  return "?";
}

/**
 * The continuous problem
 *   u_t - div(|grad u|^{p(x)-2} grad u) = lambda u^{q(x)-1} + g u^{-delta(x)} + beta f
 * with zero Dirichlet data on a box and u(0) = u0.
 *
 * Immutable once validated; share it through ProblemPtr.
 */
struct ProblemSpec {
  GridPtr grid;
  ExponentField p = ExponentField::constant(2.0);
  ExponentField q = ExponentField::constant(2.0);
  ExponentField delta = ExponentField::constant(0.5);
  Eigen::VectorXd g;   // nodal, spatial only
  SpaceTimeField f;    // nodal x time
  Eigen::VectorXd u0;  // nodal
  double lambda = 0.0;
  double beta = 1.0;
  double T = 1.0;
  double r = 2.0;
  Regime regime = Regime::none;

  std::size_t dim() const { return grid->dim(); }

  /// Checks every data invariant; throws ConfigError on the first violation.
  void validate() const {
    if (!grid) throw ConfigError("problem: missing grid");
    const auto nodes = static_cast<Eigen::Index>(grid->node_count());
    if (g.size() != nodes) throw ConfigError("problem: g has wrong length");
    if (u0.size() != nodes) throw ConfigError("problem: u0 has wrong length");
    if (!f) throw ConfigError("problem: missing forcing f");
    p.require_above(*grid, 1.0, "p");
    q.require_above(*grid, 1.0, "q");
    delta.require_above(*grid, 0.0, "delta");
    for (Eigen::Index i = 0; i < nodes; ++i) {
      if (!(g[i] >= 0.0) || !std::isfinite(g[i])) throw ConfigError("problem: g must be finite and >= 0");
      if (!(u0[i] >= 0.0) || !std::isfinite(u0[i])) throw ConfigError("problem: u0 must be finite and >= 0");
    }
    if (!(lambda >= 0.0)) throw ConfigError("problem: lambda must be >= 0");
    if (!(beta >= 0.0)) throw ConfigError("problem: beta must be >= 0");
    if (!(T > 0.0)) throw ConfigError("problem: T must be > 0");
    if (!(r >= 2.0)) throw ConfigError("problem: r must be >= 2");
  }
};

using ProblemPtr = std::shared_ptr<const ProblemSpec>;

inline SpaceTimeField zero_forcing() {
  return [](std::size_t, double) { return 0.0; };
}

struct HypothesisCheck {
  std::string name;
  bool satisfied = false;
  double lhs = 0.0;
  double rhs = 0.0;
  std::optional<std::size_t> node;  // worst node for pointwise checks
};

struct HypothesisReport {
  Regime regime = Regime::none;
  std::vector<HypothesisCheck> checks;
  bool outside_theory = false;  // N = 1 desk-scale mode or no regime

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.satisfied; });
  }

  const HypothesisCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.satisfied) return &c;
    return nullptr;
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(10);
    os << "regime " << pxlap::to_string(regime) << ": " << (passed() ? "PASS" : "FAIL") << '\n';
    if (outside_theory && regime == Regime::none) os << "  note: no hypothesis set selected; existence theory not invoked\n";
    else if (outside_theory) os << "  note: N = 1 lies outside the theory (which needs N >= 2); checks evaluated formally\n";
    for (const auto& c : checks) {
      os << "  [" << (c.satisfied ? "ok" : "FAIL") << "] " << c.name << "  (lhs " << c.lhs << ", rhs " << c.rhs;
      if (c.node) os << ", node " << *c.node;
      os << ")\n";
    }
    return os.str();
  }
};

namespace detail {

inline HypothesisCheck strict_less(std::string name, double lhs, double rhs) {
  return HypothesisCheck{std::move(name), lhs < rhs, lhs, rhs, std::nullopt};
}

}  // namespace detail

/// (A1) 2 - 1/(N+1) < p- <= p+ < N and (A2) q+ < p- + 1/(N+1).
inline HypothesisReport validate_hypotheses_A(const ProblemSpec& spec) {
  const auto& grid = *spec.grid;
  const double N = static_cast<double>(grid.dim());
  const auto [p_minus, p_plus] = exponent_bounds(spec.p, grid);
  const auto [q_minus, q_plus] = exponent_bounds(spec.q, grid);
  (void)q_minus;

  HypothesisReport rep;
  rep.regime = Regime::A;
  rep.outside_theory = grid.dim() < 2;
  rep.checks.push_back(detail::strict_less("A1: 2-1/(N+1) < p-", 2.0 - 1.0 / (N + 1.0), p_minus));
  rep.checks.push_back(detail::strict_less("A1: p+ < N", p_plus, N));
  rep.checks.push_back(detail::strict_less("A2: q+ < p- + 1/(N+1)", q_plus, p_minus + 1.0 / (N + 1.0)));
  return rep;
}

/// (B1) 2 <= p- <= p+ < N, (B2) p(x) <= q(x) < p*(x), (B3) q+ < p-(1 + r/N), (B4) r > max{q+, delta+ + 1}.
inline HypothesisReport validate_hypotheses_B(const ProblemSpec& spec) {
  const auto& grid = *spec.grid;
  const double N = static_cast<double>(grid.dim());
  const Eigen::VectorXd p = spec.p.sample_nodes(grid);
  const Eigen::VectorXd q = spec.q.sample_nodes(grid);
  const auto [p_minus, p_plus] = std::pair{p.minCoeff(), p.maxCoeff()};
  const double q_plus = q.maxCoeff();
  const double delta_plus = exponent_bounds(spec.delta, grid).second;

  HypothesisReport rep;
  rep.regime = Regime::B;
  rep.outside_theory = grid.dim() < 2;
  rep.checks.push_back(HypothesisCheck{"B1: 2 <= p-", 2.0 <= p_minus, 2.0, p_minus, std::nullopt});
  rep.checks.push_back(detail::strict_less("B1: p+ < N", p_plus, N));

  // p(x) <= q(x): report the node with the smallest margin q - p.
  HypothesisCheck lower{"B2: p(x) <= q(x)", true, 0.0, 0.0, std::nullopt};
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double margin = q[i] - p[i];
    if (margin < worst) {
      worst = margin;
      lower.lhs = p[i];
      lower.rhs = q[i];
      lower.node = static_cast<std::size_t>(i);
    }
  }
  lower.satisfied = worst >= 0.0;
  rep.checks.push_back(lower);

  // q(x) < p*(x) = N p(x) / (N - p(x)); p*(x) is undefined where p(x) >= N.
  HypothesisCheck upper{"B2: q(x) < p*(x)", true, 0.0, 0.0, std::nullopt};
  worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] >= N) {
      upper.satisfied = false;
      upper.lhs = q[i];
      upper.rhs = std::numeric_limits<double>::infinity();
      upper.node = static_cast<std::size_t>(i);
      upper.name = "B2: q(x) < p*(x) [p(x) >= N, p* undefined]";
      worst = -std::numeric_limits<double>::infinity();
      break;
    }
    const double p_star = N * p[i] / (N - p[i]);
    const double margin = p_star - q[i];
    if (margin < worst) {
      worst = margin;
      upper.lhs = q[i];
      upper.rhs = p_star;
      upper.node = static_cast<std::size_t>(i);
    }
  }
  if (std::isfinite(worst)) upper.satisfied = worst > 0.0;
  rep.checks.push_back(upper);

  rep.checks.push_back(detail::strict_less("B3: q+ < p-(1 + r/N)", q_plus, p_minus * (1.0 + spec.r / N)));
  rep.checks.push_back(
      HypothesisCheck{"B4: r > max{q+, delta+ + 1}", spec.r > std::max(q_plus, delta_plus + 1.0), spec.r,
                      std::max(q_plus, delta_plus + 1.0), std::nullopt});
  return rep;
}

/// Dispatches on spec.regime; Regime::none yields an empty (passing) report.
inline HypothesisReport validate_hypotheses(const ProblemSpec& spec) {
  switch (spec.regime) {
    case Regime::A: return validate_hypotheses_A(spec);
    case Regime::B: return validate_hypotheses_B(spec);
    case Regime::none: break;
  }
  HypothesisReport rep;
  rep.regime = Regime::none;
  rep.outside_theory = true;
  return rep;
}

}  // namespace pxlap
