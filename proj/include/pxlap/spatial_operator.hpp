#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pxlap/errors.hpp"
#include "pxlap/field.hpp"
#include "pxlap/grid.hpp"

namespace pxlap {

/// Hessian-only p-term edge weight on edges with zero gradient: eps^{p-2}.
inline constexpr double kHessianEdgeEps = 1e-8;

/// Iterates must stay above -1/n + kSingularGuard wherever g > 0.
inline constexpr double kSingularGuard = 1e-12;

/// Two-point gradient per edge: (u_head - u_tail) / h_axis.
inline EdgeField discrete_gradient(const GridFunction& u) {
  const Grid& grid = *u.grid;
  EdgeField out{u.grid, Eigen::VectorXd(static_cast<Eigen::Index>(grid.edge_count()))};
  const auto& edges = grid.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    out.values[static_cast<Eigen::Index>(k)] =
        (u[e.head] - u[e.tail]) / grid.spacing(e.axis);
  }
  return out;
}

/// psi(s) = |s|^{p-2} s, the p-Laplacian flux.
inline double p_flux(double s, double p) {
  if (s == 0.0) return 0.0;
  return std::pow(std::abs(s), p - 2.0) * s;
}

/**
 * -div(|grad u|^{p(x)-2} grad u) at interior nodes with two-point fluxes and p at
 * edge midpoints; boundary entries are zero.
 */
inline GridFunction apply_p_laplacian(const GridFunction& u, const ExponentField& p) {
  const Grid& grid = *u.grid;
  const Eigen::VectorXd p_edge = p.sample_edges(grid);
  GridFunction out(u.grid);
  const auto& edges = grid.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    const double h = grid.spacing(e.axis);
    const double flux = grid.edge_weight(k) * p_flux((u[e.head] - u[e.tail]) / h, p_edge[static_cast<Eigen::Index>(k)]) / h;
    out.values[static_cast<Eigen::Index>(e.head)] += flux;
    out.values[static_cast<Eigen::Index>(e.tail)] -= flux;
  }
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    auto& v = out.values[static_cast<Eigen::Index>(i)];
    v = grid.on_boundary(i) ? 0.0 : v / grid.node_weight(i);
  }
  return out;
}

/// Phi_n(w) = int_0^w (s + 1/n)^{-delta} ds.
inline double singular_primitive(double w, double n, double delta) {
  const double c = 1.0 / n;
  if (delta == 1.0) return std::log1p(w / c);
  return (std::pow(w + c, 1.0 - delta) - std::pow(c, 1.0 - delta)) / (1.0 - delta);
}

/// Phi_n(w + dw) - Phi_n(w), free of cancellation for small dw.
inline double singular_primitive_increment(double w, double dw, double n, double delta) {
  const double a = w + 1.0 / n;
  const double ratio = std::log1p(dw / a);
  if (delta == 1.0) return ratio;
  return std::pow(a, 1.0 - delta) * std::expm1((1.0 - delta) * ratio) / (1.0 - delta);
}

/// |s + ds|^p / p - |s|^p / p, free of cancellation for small ds.
inline double edge_energy_increment(double s, double ds, double p) {
  const double a = std::abs(s);
  const double b = std::abs(s + ds);
  if (a == 0.0) return std::pow(b, p) / p;
  if (b == 0.0) return -std::pow(a, p) / p;
  return std::pow(a, p) * std::expm1(p * std::log1p((b - a) / a)) / p;
}

/**
 * One implicit step of the regularized scheme as a convex minimization:
 *
 *   J(w) = sum_i m_i [ (w_i - wprev_i)^2 / (2 eta) - S_i w_i - g_i Phi_n(w_i) ]
 *        + sum_e m_e |grad_e w|^{p_e} / p_e
 *
 * with lumped node weights m_i, edge weights m_e, p at edge midpoints, delta at nodes.
 * Only interior nodes are unknowns; boundary values are held at zero.
 */
struct StepSystem {
  GridPtr grid;
  Eigen::VectorXd w_prev;
  double eta = 0.0;
  Eigen::VectorXd source;  // frozen S = lambda h_n(.) + beta [f_n]_eta
  Eigen::VectorXd g;
  double n = 1.0;
  Eigen::VectorXd p_edge;
  Eigen::VectorXd delta_node;

  static StepSystem make(GridPtr grid, Eigen::VectorXd w_prev, double eta, Eigen::VectorXd source,
                         Eigen::VectorXd g, double n, const ExponentField& p, const ExponentField& delta) {
    StepSystem sys;
    sys.p_edge = p.sample_edges(*grid);
    sys.delta_node = delta.sample_nodes(*grid);
    sys.grid = std::move(grid);
    sys.w_prev = std::move(w_prev);
    sys.eta = eta;
    sys.source = std::move(source);
    sys.g = std::move(g);
    sys.n = n;
    sys.check();
    return sys;
  }

  void check() const {
    const auto nodes = static_cast<Eigen::Index>(grid->node_count());
    if (!(eta > 0.0)) throw ConfigError("step system: eta must be > 0");
    if (!(n >= 1.0)) throw ConfigError("step system: n must be >= 1");
    if (w_prev.size() != nodes || source.size() != nodes || g.size() != nodes || delta_node.size() != nodes)
      throw ConfigError("step system: nodal vectors have wrong length");
    if (p_edge.size() != static_cast<Eigen::Index>(grid->edge_count()))
      throw ConfigError("step system: edge exponents have wrong length");
    if (!source.allFinite() || !w_prev.allFinite() || !g.allFinite())
      throw ConfigError("step system: frozen sources must be finite");
    if ((p_edge.array() <= 1.0).any()) throw ConfigError("step system: p must exceed 1 on every edge");
  }

  /// Throws DomainError when w leaves the set where Phi_n is defined.
  void check_domain(const Eigen::VectorXd& w) const {
    const double floor = -1.0 / n + 1e-14;
    for (std::size_t i : grid->interior_nodes()) {
      const auto k = static_cast<Eigen::Index>(i);
      if (g[k] > 0.0 && !(w[k] > floor)) throw DomainError("step energy: w <= -1/n under the singular term", i);
    }
  }
};

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

inline double step_energy(const StepSystem& sys, const Eigen::VectorXd& w) {
  sys.check_domain(w);
  const Grid& grid = *sys.grid;
  detail::CompensatedSum J;
  for (std::size_t i : grid.interior_nodes()) {
    const auto k = static_cast<Eigen::Index>(i);
    const double m = grid.node_weight(i);
    const double dw = w[k] - sys.w_prev[k];
    J.add(m * dw * dw / (2.0 * sys.eta));
    J.add(-m * sys.source[k] * w[k]);
    if (sys.g[k] > 0.0) J.add(-m * sys.g[k] * singular_primitive(w[k], sys.n, sys.delta_node[k]));
  }
  const auto& edges = grid.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double s = (w[static_cast<Eigen::Index>(edges[e].head)] - w[static_cast<Eigen::Index>(edges[e].tail)]) /
                     grid.spacing(edges[e].axis);
    const double p = sys.p_edge[static_cast<Eigen::Index>(e)];
    if (s != 0.0) J.add(grid.edge_weight(e) * std::pow(std::abs(s), p) / p);
  }
  return J.value();
}

/// J(w + dw) - J(w) assembled term by term, accurate even when the change is tiny.
inline double step_energy_change(const StepSystem& sys, const Eigen::VectorXd& w, const Eigen::VectorXd& dw) {
  const Grid& grid = *sys.grid;
  detail::CompensatedSum dJ;
  for (std::size_t i : grid.interior_nodes()) {
    const auto k = static_cast<Eigen::Index>(i);
    const double m = grid.node_weight(i);
    const double d = dw[k];
    if (d == 0.0) continue;
    dJ.add(m * d * (2.0 * (w[k] - sys.w_prev[k]) + d) / (2.0 * sys.eta));
    dJ.add(-m * sys.source[k] * d);
    if (sys.g[k] > 0.0) dJ.add(-m * sys.g[k] * singular_primitive_increment(w[k], d, sys.n, sys.delta_node[k]));
  }
  const auto& edges = grid.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto t = static_cast<Eigen::Index>(edges[e].tail);
    const auto hd = static_cast<Eigen::Index>(edges[e].head);
    const double h = grid.spacing(edges[e].axis);
    const double ds = (dw[hd] - dw[t]) / h;
    if (ds == 0.0) continue;
    dJ.add(grid.edge_weight(e) * edge_energy_increment((w[hd] - w[t]) / h, ds, sys.p_edge[static_cast<Eigen::Index>(e)]));
  }
  return dJ.value();
}

/// Nodal gradient of J (weighted residual of the step equation); zero at boundary nodes.
inline Eigen::VectorXd step_gradient(const StepSystem& sys, const Eigen::VectorXd& w) {
  sys.check_domain(w);
  const Grid& grid = *sys.grid;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(w.size());
  const auto& edges = grid.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto t = static_cast<Eigen::Index>(edges[e].tail);
    const auto hd = static_cast<Eigen::Index>(edges[e].head);
    const double h = grid.spacing(edges[e].axis);
    const double flux = grid.edge_weight(e) * p_flux((w[hd] - w[t]) / h, sys.p_edge[static_cast<Eigen::Index>(e)]) / h;
    grad[hd] += flux;
    grad[t] -= flux;
  }
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (grid.on_boundary(i)) {
      grad[k] = 0.0;
      continue;
    }
    const double m = grid.node_weight(i);
    double local = (w[k] - sys.w_prev[k]) / sys.eta - sys.source[k];
    if (sys.g[k] > 0.0) local -= sys.g[k] * std::pow(w[k] + 1.0 / sys.n, -sys.delta_node[k]);
    grad[k] += m * local;
  }
  return grad;
}

/// Residual of the discrete step equation with node-weight scaling; identical to the energy gradient.
inline Eigen::VectorXd step_residual(const StepSystem& sys, const Eigen::VectorXd& w) { return step_gradient(sys, w); }

/// Hessian of J over the interior unknowns (ordering of Grid::interior_nodes()).
inline Eigen::SparseMatrix<double> step_hessian(const StepSystem& sys, const Eigen::VectorXd& w) {
  sys.check_domain(w);
  const Grid& grid = *sys.grid;
  const auto unknowns = static_cast<Eigen::Index>(grid.interior_nodes().size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(unknowns) * (1 + 4 * grid.dim()));
  for (std::size_t i : grid.interior_nodes()) {
    const auto k = static_cast<Eigen::Index>(i);
    const auto row = grid.unknown_index(i);
    double diag = grid.node_weight(i) / sys.eta;
    if (sys.g[k] > 0.0)
      diag += grid.node_weight(i) * sys.g[k] * sys.delta_node[k] *
              std::pow(w[k] + 1.0 / sys.n, -sys.delta_node[k] - 1.0);
    trip.emplace_back(row, row, diag);
  }
  const auto& edges = grid.edges();
  const double eps2 = kHessianEdgeEps * kHessianEdgeEps;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto a = grid.unknown_index(edges[e].tail);
    const auto b = grid.unknown_index(edges[e].head);
    if (a < 0 && b < 0) continue;
    const double h = grid.spacing(edges[e].axis);
    const double s = (w[static_cast<Eigen::Index>(edges[e].head)] - w[static_cast<Eigen::Index>(edges[e].tail)]) / h;
    const double p = sys.p_edge[static_cast<Eigen::Index>(e)];
    const double s2 = s != 0.0 ? s * s : eps2;
    const double c = grid.edge_weight(e) * (p - 1.0) * std::pow(s2, 0.5 * (p - 2.0)) / (h * h);
    if (a >= 0) trip.emplace_back(a, a, c);
    if (b >= 0) trip.emplace_back(b, b, c);
    if (a >= 0 && b >= 0) {
      trip.emplace_back(a, b, -c);
      trip.emplace_back(b, a, -c);
    }
  }
  Eigen::SparseMatrix<double> H(unknowns, unknowns);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

/// Restriction of a nodal vector to the interior unknowns.
inline Eigen::VectorXd to_unknowns(const Grid& grid, const Eigen::VectorXd& nodal) {
  const auto& interior = grid.interior_nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t j = 0; j < interior.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = nodal[static_cast<Eigen::Index>(interior[j])];
  return out;
}

/// Prolongation of an interior vector to all nodes with zero boundary values.
inline Eigen::VectorXd from_unknowns(const Grid& grid, const Eigen::VectorXd& unknowns) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.node_count()));
  const auto& interior = grid.interior_nodes();
  for (std::size_t j = 0; j < interior.size(); ++j)
    out[static_cast<Eigen::Index>(interior[j])] = unknowns[static_cast<Eigen::Index>(j)];
  return out;
}

}  // namespace pxlap
