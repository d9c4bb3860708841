#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pxlap/errors.hpp"
#include "pxlap/function_spaces.hpp"
#include "pxlap/spatial_operator.hpp"
#include "pxlap/time_march.hpp"
#include "pxlap/truncation.hpp"

namespace pxlap {

/// sum_{m>=1} eta sum_e m_e |grad T_k(w^{(m)})|^{p_e}.
inline double trunc_energy(const Trajectory& traj, double k) {
  if (!(k > 0.0)) throw ConfigError("trunc_energy: k must be > 0");
  double sum = 0.0;
  for (std::size_t m = 1; m <= traj.M(); ++m) {
    GridFunction t = traj.slice(m);
    t.values = t.values.unaryExpr([k](double s) { return truncate(s, k); });
    sum += traj.eta() * modular_rho(discrete_gradient(t), traj.spec->p);
  }
  return sum;
}

struct GagliardoNirenbergExponents {
  double E = 0.0;
  double B = 0.0;
};

/**
 * E(rho) = (q+ - 2) / (p-(1 + (2 + rho)/N) - q+),
 * B(rho) = (q+ + rho + (q+ - p-) E(rho)) / (2 + rho).
 */
inline GagliardoNirenbergExponents gn_exponents(double p_minus, double q_plus, std::size_t N, double rho) {
  const double denom = p_minus * (1.0 + (2.0 + rho) / static_cast<double>(N)) - q_plus;
  if (!(denom > 0.0))
    throw DomainError("gn_exponents: p-(1 + (2+rho)/N) - q+ must be positive (requires q+ < p-(1 + r/N))");
  GagliardoNirenbergExponents out;
  out.E = (q_plus - 2.0) / denom;
  out.B = (q_plus + rho + (q_plus - p_minus) * out.E) / (2.0 + rho);
  return out;
}

struct NewtonStats {
  std::size_t steps = 0;
  std::size_t total_iterations = 0;
  int max_iterations = 0;
  std::size_t total_backtracks = 0;
  double max_final_residual = 0.0;
};

inline NewtonStats newton_stats(const Trajectory& traj) {
  NewtonStats s;
  for (const auto& r : traj.reports) {
    s.steps += 1;
    s.total_iterations += static_cast<std::size_t>(r.iterations);
    s.max_iterations = std::max(s.max_iterations, r.iterations);
    s.total_backtracks += static_cast<std::size_t>(r.line_search_backtracks);
    s.max_final_residual = std::max(s.max_final_residual, r.final_residual);
  }
  return s;
}

/// Empirical stand-ins for the constants of the a priori estimates; nothing here is asserted.
struct EstimateLedger {
  double r = 2.0;
  double sup_L1 = 0.0;
  double sup_Lr = 0.0;
  double sup_Linf = 0.0;
  std::vector<std::pair<double, double>> tail_Linf;      // (eta_bar, sup_{t_m > eta_bar} ||w^{(m)}||_inf)
  std::vector<std::pair<double, double>> trunc_energy;   // (k, value)
  std::optional<GagliardoNirenbergExponents> gn;         // at rho = r - 2 when admissible
  std::optional<double> barrier_margin;
  double gradient_modular = 0.0;
  double weighted_time_derivative = 0.0;
  double interpolant_gap = 0.0;
  NewtonStats newton;
};

inline EstimateLedger ledger(const Trajectory& traj, double r, const std::vector<double>& etas,
                             const std::vector<double>& ks = {}) {
  EstimateLedger L;
  L.r = r;
  L.sup_L1 = sup_time_norm(traj.states, 1.0);
  L.sup_Lr = sup_time_norm(traj.states, r);
  L.sup_Linf = sup_time_norm(traj.states, std::numeric_limits<double>::infinity());
  for (double eb : etas) {
    double best = 0.0;
    for (std::size_t m = 0; m <= traj.M(); ++m)
      if (traj.time(m) > eb) best = std::max(best, traj.step(m).cwiseAbs().maxCoeff());
    L.tail_Linf.emplace_back(eb, best);
  }
  std::vector<double> sorted_k = ks;
  std::sort(sorted_k.begin(), sorted_k.end());
  for (double k : sorted_k) L.trunc_energy.emplace_back(k, trunc_energy(traj, k));

  const Grid& grid = traj.grid();
  const double p_minus = exponent_bounds(traj.spec->p, grid).first;
  const double q_plus = exponent_bounds(traj.spec->q, grid).second;
  const double rho = r - 2.0;
  const double denom = p_minus * (1.0 + (2.0 + rho) / static_cast<double>(grid.dim())) - q_plus;
  if (q_plus >= 2.0 && denom > 0.0) L.gn = gn_exponents(p_minus, q_plus, grid.dim(), rho);

  L.gradient_modular = gradient_modular(traj);
  L.weighted_time_derivative = weighted_time_derivative(traj);
  L.interpolant_gap = interpolant_gap(traj);
  L.newton = newton_stats(traj);
  return L;
}

/// CSV rows (quantity, k_or_eta, value) with a header line.
inline void write_ledger_csv(const EstimateLedger& L, std::ostream& os) {
  const auto row = [&os](const char* q, const std::string& key, double v) {
    os << q << ',' << key << ',' << format_double(v) << '\n';
  };
  os << "quantity,k_or_eta,value\n";
  row("sup_L1", "", L.sup_L1);
  row("sup_Lr", format_double(L.r), L.sup_Lr);
  row("sup_Linf", "", L.sup_Linf);
  for (const auto& [eb, v] : L.tail_Linf) row("tail_Linf", format_double(eb), v);
  for (const auto& [k, v] : L.trunc_energy) row("trunc_energy", format_double(k), v);
  if (L.gn) {
    row("gn_E", format_double(L.r - 2.0), L.gn->E);
    row("gn_B", format_double(L.r - 2.0), L.gn->B);
  }
  if (L.barrier_margin) row("barrier_margin", "", *L.barrier_margin);
  row("gradient_modular", "", L.gradient_modular);
  row("weighted_time_derivative", "", L.weighted_time_derivative);
  row("interpolant_gap", "", L.interpolant_gap);
  row("newton_total_iterations", "", static_cast<double>(L.newton.total_iterations));
  row("newton_max_iterations", "", static_cast<double>(L.newton.max_iterations));
  row("newton_total_backtracks", "", static_cast<double>(L.newton.total_backtracks));
  row("newton_max_final_residual", "", L.newton.max_final_residual);
}

/// Smooth test function phi(x, t); admissible when it vanishes on the lateral boundary and at t = T.
using TestFunction = std::function<double(const Point& x, double t)>;

/**
 * Discrete weak-form defect of a trajectory against a test function, with the
 * right-endpoint (piecewise-constant) time rule and summation by parts in time:
 *
 *   - sum_{m=1}^{M-1} <w^m, phi^{m+1} - phi^m> - <w^0, phi^1>
 *   + sum_{m=1}^{M} eta [ sum_e m_e psi(grad w^m) grad phi^m - <S^m + g (w^m + 1/n)^{-delta}, phi^m> ]
 *
 * with lumped inner products <a, b> = sum_i m_i a_i b_i. Sources are recomputed
 * from the problem data and the trajectory's power coupling.
 */
inline double weak_form_residual(const Trajectory& traj, const TestFunction& phi) {
  const Grid& grid = traj.grid();
  const ProblemSpec& spec = *traj.spec;
  const std::size_t M = traj.M();
  const double T = traj.time(M);
  const auto nodes = static_cast<Eigen::Index>(grid.node_count());

  std::vector<Eigen::VectorXd> phis(M + 1, Eigen::VectorXd(nodes));
  double scale = 0.0;
  for (std::size_t m = 0; m <= M; ++m) {
    const double t = traj.time(m);
    for (Eigen::Index i = 0; i < nodes; ++i) {
      phis[m][i] = phi(grid.coordinate(static_cast<std::size_t>(i)), t);
      scale = std::max(scale, std::abs(phis[m][i]));
    }
  }
  const double admissible = 1e-12 * std::max(scale, 1.0);
  for (std::size_t m = 0; m <= M; ++m)
    for (Eigen::Index i = 0; i < nodes; ++i)
      if (grid.on_boundary(static_cast<std::size_t>(i)) && std::abs(phis[m][i]) > admissible)
        throw ConfigError("weak_form_residual: test function must vanish on the lateral boundary");
  if (phis[M].cwiseAbs().maxCoeff() > admissible)
    throw ConfigError("weak_form_residual: test function must vanish at t = T (T = " + format_double(T) + ")");

  const auto inner = [&grid](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (std::size_t i : grid.interior_nodes())
      s += grid.node_weight(i) * a[static_cast<Eigen::Index>(i)] * b[static_cast<Eigen::Index>(i)];
    return s;
  };

  const Eigen::VectorXd p_edge = spec.p.sample_edges(grid);
  const Eigen::VectorXd delta = spec.delta.sample_nodes(grid);
  const auto& edges = grid.edges();

  detail::CompensatedSum R;
  R.add(-inner(traj.step(0), phis[1]));
  for (std::size_t m = 1; m < M; ++m) R.add(-inner(traj.step(m), phis[m + 1] - phis[m]));
  for (std::size_t m = 1; m <= M; ++m) {
    const Eigen::VectorXd& w = traj.step(m);
    const Eigen::VectorXd& ph = phis[m];
    double diffusion = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto t = static_cast<Eigen::Index>(edges[e].tail);
      const auto hd = static_cast<Eigen::Index>(edges[e].head);
      const double h = grid.spacing(edges[e].axis);
      diffusion += grid.edge_weight(e) * p_flux((w[hd] - w[t]) / h, p_edge[static_cast<Eigen::Index>(e)]) *
                   (ph[hd] - ph[t]) / h;
    }
    Eigen::VectorXd rhs = step_source(traj, m);
    for (Eigen::Index i = 0; i < nodes; ++i)
      if (spec.g[i] > 0.0) rhs[i] += spec.g[i] * std::pow(w[i] + 1.0 / traj.n, -delta[i]);
    R.add(traj.eta() * (diffusion - inner(rhs, ph)));
  }
  return R.value();
}

}  // namespace pxlap
