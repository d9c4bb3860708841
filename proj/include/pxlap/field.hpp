#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pxlap/errors.hpp"
#include "pxlap/grid.hpp"

namespace pxlap {

enum class FieldKind { constant, affine, table, sine, function };

/**
 * A continuous scalar field on the closure of the domain.
 *
 * Used for the exponents p, q, delta and for the spatial data g, u0.
 * Table fields hold one value per grid node and are interpolated linearly
 * along edges; sine fields are amplitude * prod_d sin(pi (x_d - a_d) / L_d).
 */
class SpatialField {
public:
  static SpatialField constant(double v) {
    SpatialField f(FieldKind::constant);
    f.coeffs_ = {v};
    return f;
  }

  /// a + sum_d slope[d] * x_d
  static SpatialField affine(double a, std::vector<double> slope) {
    SpatialField f(FieldKind::affine);
    f.coeffs_.push_back(a);
    f.coeffs_.insert(f.coeffs_.end(), slope.begin(), slope.end());
    return f;
  }

  static SpatialField table(std::vector<double> nodal) {
    SpatialField f(FieldKind::table);
    f.coeffs_ = std::move(nodal);
    return f;
  }

  static SpatialField sine(double amplitude) {
    SpatialField f(FieldKind::sine);
    f.coeffs_ = {amplitude};
    return f;
  }

  static SpatialField function(std::function<double(const Point&)> fn) {
    SpatialField f(FieldKind::function);
    f.fn_ = std::move(fn);
    return f;
  }

  FieldKind kind() const { return kind_; }
  const std::vector<double>& coefficients() const { return coeffs_; }

  /// Throws ConfigError when the field cannot be evaluated on this grid.
  void check_evaluable(const Grid& grid) const {
    if (kind_ == FieldKind::table && coeffs_.size() != grid.node_count())
      throw ConfigError("table field has " + std::to_string(coeffs_.size()) + " entries, grid has " +
                        std::to_string(grid.node_count()) + " nodes");
    if (kind_ == FieldKind::affine && coeffs_.size() > grid.dim() + 1)
      throw ConfigError("affine field has more slopes than the grid has axes");
  }

  double at_node(const Grid& grid, std::size_t node) const {
    if (kind_ == FieldKind::table) return coeffs_.at(node);
    return at_point(grid, grid.coordinate(node));
  }

  double at_edge(const Grid& grid, const Edge& e) const {
    if (kind_ == FieldKind::table) return 0.5 * (coeffs_.at(e.tail) + coeffs_.at(e.head));
    return at_point(grid, grid.edge_midpoint(e));
  }

  Eigen::VectorXd sample_nodes(const Grid& grid) const {
    check_evaluable(grid);
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.node_count()));
    for (std::size_t i = 0; i < grid.node_count(); ++i) v[static_cast<Eigen::Index>(i)] = at_node(grid, i);
    return v;
  }

  Eigen::VectorXd sample_edges(const Grid& grid) const {
    check_evaluable(grid);
    const auto& edges = grid.edges();
    Eigen::VectorXd v(static_cast<Eigen::Index>(edges.size()));
    for (std::size_t k = 0; k < edges.size(); ++k) v[static_cast<Eigen::Index>(k)] = at_edge(grid, edges[k]);
    return v;
  }

  /// Fails unless every node value is finite and strictly above `lower`.
  void require_above(const Grid& grid, double lower, const std::string& name) const {
    check_evaluable(grid);
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
      const double v = at_node(grid, i);
      if (!std::isfinite(v) || !(v > lower))
        throw ConfigError(name + " must be finite and > " + std::to_string(lower) + " at every node; node " +
                          std::to_string(i) + " has " + std::to_string(v));
    }
  }

private:
  explicit SpatialField(FieldKind k) : kind_(k) {}

  double at_point(const Grid& grid, const Point& x) const {
    switch (kind_) {
      case FieldKind::constant:
        return coeffs_[0];
      case FieldKind::affine: {
        double v = coeffs_[0];
        for (std::size_t d = 0; d + 1 < coeffs_.size(); ++d) v += coeffs_[d + 1] * x[d];
        return v;
      }
      case FieldKind::sine: {
        double v = coeffs_[0];
        for (std::size_t d = 0; d < grid.dim(); ++d) {
          const auto [a, b] = grid.extent(d);
          v *= std::sin(std::numbers::pi * (x[d] - a) / (b - a));
        }
        return v;
      }
      case FieldKind::function:
        return fn_(x);
      case FieldKind::table:
        break;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  FieldKind kind_;
  std::vector<double> coeffs_;
  std::function<double(const Point&)> fn_;
};

/// Exponent fields p(.), q(.), delta(.) share the spatial-field machinery.
using ExponentField = SpatialField;

/// Exact (min, max) of the field over the grid nodes.
inline std::pair<double, double> exponent_bounds(const ExponentField& field, const Grid& grid) {
  const Eigen::VectorXd v = field.sample_nodes(grid);
  return {v.minCoeff(), v.maxCoeff()};
}

}  // namespace pxlap
