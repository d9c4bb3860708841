#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pxlap/errors.hpp"
#include "pxlap/field.hpp"
#include "pxlap/grid.hpp"

namespace pxlap {

/// Nodal samples of a space-time function on a uniform time grid t_m = m * eta.
struct SpaceTimeSamples {
  GridPtr grid;
  double eta = 0.0;
  std::vector<Eigen::VectorXd> slices;  // slices[m] at t_m

  std::size_t steps() const { return slices.empty() ? 0 : slices.size() - 1; }
  double time(std::size_t m) const { return eta * static_cast<double>(m); }
};

namespace detail {

/// sum_i w_i |u_i|^{p_i}
inline double weighted_power_sum(const Eigen::VectorXd& values, const Eigen::VectorXd& exponents,
                                 const std::vector<double>& weights) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double a = std::abs(values[i]);
    if (a != 0.0) sum += weights[static_cast<std::size_t>(i)] * std::pow(a, exponents[i]);
  }
  return sum;
}

inline std::vector<double> node_weights(const Grid& grid) {
  std::vector<double> w(grid.node_count());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = grid.node_weight(i);
  return w;
}

inline std::vector<double> edge_weights(const Grid& grid) {
  std::vector<double> w(grid.edge_count());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = grid.edge_weight(k);
  return w;
}

/// Solves rho(u / mu) = 1 for mu by bisection; rho(u / mu) is strictly decreasing in mu.
inline double luxemburg_from_samples(const Eigen::VectorXd& values, const Eigen::VectorXd& exponents,
                                     const std::vector<double>& weights, double total_measure) {
  const double umax = values.cwiseAbs().maxCoeff();
  if (umax == 0.0) return 0.0;
  const auto rho_at = [&](double mu) { return weighted_power_sum(values / mu, exponents, weights); };

  const double p_minus = exponents.minCoeff();
  double hi = std::max(1.0, umax) * std::pow(total_measure, 1.0 / p_minus) * 2.0;
  while (rho_at(hi) >= 1.0) hi *= 2.0;
  double lo = hi;
  while (rho_at(lo) < 1.0) lo *= 0.5;

  for (int it = 0; it < 400 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (rho_at(mid) >= 1.0 ? lo : hi) = mid;
  }
  // Pick the endpoint with the smaller defect.
  return std::abs(rho_at(lo) - 1.0) <= std::abs(rho_at(hi) - 1.0) ? lo : hi;
}

}  // namespace detail

/// rho(u) = int |u|^{p(x)} dx with trapezoidal node quadrature, p at the nodes.
inline double modular_rho(const GridFunction& u, const ExponentField& p) {
  const Grid& grid = *u.grid;
  return detail::weighted_power_sum(u.values, p.sample_nodes(grid), detail::node_weights(grid));
}

/// rho of an edge field (a discrete gradient): midpoint rule per edge, p at edge midpoints.
inline double modular_rho(const EdgeField& e, const ExponentField& p) {
  const Grid& grid = *e.grid;
  return detail::weighted_power_sum(e.values, p.sample_edges(grid), detail::edge_weights(grid));
}

/// Luxemburg norm inf{mu > 0 : rho(u/mu) <= 1}; returns 0 for u == 0.
inline double luxemburg_norm(const GridFunction& u, const ExponentField& p) {
  const Grid& grid = *u.grid;
  return detail::luxemburg_from_samples(u.values, p.sample_nodes(grid), detail::node_weights(grid),
                                        grid.measure());
}

inline double luxemburg_norm(const EdgeField& e, const ExponentField& p) {
  const Grid& grid = *e.grid;
  return detail::luxemburg_from_samples(e.values, p.sample_edges(grid), detail::edge_weights(grid),
                                        grid.measure());
}

/// ||v||_{L^r} of nodal values on `grid`; r = infinity gives the nodal max norm.
inline double lebesgue_norm(const Grid& grid, const Eigen::VectorXd& v, double r) {
  if (!(r >= 1.0)) throw ConfigError("lebesgue_norm: r must be >= 1");
  if (std::isinf(r)) return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a != 0.0) sum += grid.node_weight(static_cast<std::size_t>(i)) * std::pow(a, r);
  }
  return std::pow(sum, 1.0 / r);
}

inline double lebesgue_norm(const GridFunction& u, double r) { return lebesgue_norm(*u.grid, u.values, r); }

/// max over the time grid of ||u(t_m)||_{L^r}.
inline double sup_time_norm(const SpaceTimeSamples& s, double r) {
  double best = 0.0;
  for (const auto& slice : s.slices) best = std::max(best, lebesgue_norm(*s.grid, slice, r));
  return best;
}

/// sum_{m>=1} eta ||a(t_m) - b(t_m)||_{L^1}: the right-endpoint L^1(Q_T) distance.
inline double space_time_l1_distance(const SpaceTimeSamples& a, const SpaceTimeSamples& b) {
  if (a.slices.size() != b.slices.size() || !a.grid->same_discretization(*b.grid) || a.eta != b.eta)
    throw ConfigError("space_time_l1_distance: mismatched discretizations");
  double sum = 0.0;
  for (std::size_t m = 1; m < a.slices.size(); ++m)
    sum += a.eta * lebesgue_norm(*a.grid, a.slices[m] - b.slices[m], 1.0);
  return sum;
}

}  // namespace pxlap
