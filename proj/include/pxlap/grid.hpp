#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pxlap/errors.hpp"

namespace pxlap {

/// Physical coordinates; entries beyond the grid dimension are zero.
using Point = std::array<double, 3>;

/// Link between two adjacent nodes along one axis, oriented tail -> head (head has the larger index).
struct Edge {
  std::size_t tail;
  std::size_t head;
  std::size_t axis;
};

/**
 * Uniform tensor grid on an axis-aligned box in 1 to 3 dimensions.
 *
 * Nodes include the boundary; boundary nodes carry the zero Dirichlet value for
 * every function representing a member of W_0^{1,p(.)}. Node quadrature weights
 * are trapezoidal (interior nodes get the cell measure), edge weights are the
 * dual volumes of the edges (interior edges get the cell measure).
 */
class Grid {
public:
  Grid(std::vector<std::pair<double, double>> box, std::vector<std::size_t> cells)
      : box_(std::move(box)), cells_(std::move(cells)) {
    if (box_.empty() || box_.size() > 3 || box_.size() != cells_.size())
      throw ConfigError("grid: dimension must be 1..3 with one resolution entry per axis");
    for (std::size_t d = 0; d < dim(); ++d) {
      if (!(box_[d].second > box_[d].first))
        throw ConfigError("grid: box axis " + std::to_string(d) + " is empty");
      if (cells_[d] < 2)
        throw ConfigError("grid: need at least 2 cells per axis");
      spacing_[d] = (box_[d].second - box_[d].first) / static_cast<double>(cells_[d]);
    }
    stride_[0] = 1;
    for (std::size_t d = 1; d < dim(); ++d) stride_[d] = stride_[d - 1] * (cells_[d - 1] + 1);
    node_count_ = stride_[dim() - 1] * (cells_[dim() - 1] + 1);
    build_topology();
  }

  std::size_t dim() const { return box_.size(); }
  std::size_t cells(std::size_t axis) const { return cells_[axis]; }
  std::size_t nodes_along(std::size_t axis) const { return cells_[axis] + 1; }
  double spacing(std::size_t axis) const { return spacing_[axis]; }
  std::pair<double, double> extent(std::size_t axis) const { return box_[axis]; }
  const std::vector<std::pair<double, double>>& box() const { return box_; }
  const std::vector<std::size_t>& resolution() const { return cells_; }

  double cell_measure() const {
    double m = 1.0;
    for (std::size_t d = 0; d < dim(); ++d) m *= spacing_[d];
    return m;
  }

  double measure() const {
    double m = 1.0;
    for (const auto& [a, b] : box_) m *= b - a;
    return m;
  }

  std::size_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edges_.size(); }

  std::array<std::size_t, 3> multi_index(std::size_t node) const {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (std::size_t d = dim(); d-- > 0;) {
      idx[d] = node / stride_[d];
      node %= stride_[d];
    }
    return idx;
  }

  std::size_t flat_index(const std::array<std::size_t, 3>& idx) const {
    std::size_t k = 0;
    for (std::size_t d = 0; d < dim(); ++d) k += idx[d] * stride_[d];
    return k;
  }

  Point coordinate(std::size_t node) const {
    const auto idx = multi_index(node);
    Point x{0.0, 0.0, 0.0};
    for (std::size_t d = 0; d < dim(); ++d)
      x[d] = box_[d].first + spacing_[d] * static_cast<double>(idx[d]);
    return x;
  }

  Point edge_midpoint(const Edge& e) const {
    Point x = coordinate(e.tail);
    x[e.axis] += 0.5 * spacing_[e.axis];
    return x;
  }

  bool on_boundary(std::size_t node) const { return boundary_[node]; }
  const std::vector<std::size_t>& interior_nodes() const { return interior_; }
  const std::vector<Edge>& edges() const { return edges_; }
  double node_weight(std::size_t node) const { return node_weight_[node]; }
  double edge_weight(std::size_t edge) const { return edge_weight_[edge]; }

  /// Position of a node in the interior unknown vector, or -1 for boundary nodes.
  std::ptrdiff_t unknown_index(std::size_t node) const { return unknown_[node]; }

  bool same_discretization(const Grid& other) const {
    return box_ == other.box_ && cells_ == other.cells_;
  }

private:
  void build_topology() {
    boundary_.assign(node_count_, false);
    unknown_.assign(node_count_, -1);
    node_weight_.assign(node_count_, 0.0);
    for (std::size_t i = 0; i < node_count_; ++i) {
      const auto idx = multi_index(i);
      double w = 1.0;
      for (std::size_t d = 0; d < dim(); ++d) {
        const bool end = idx[d] == 0 || idx[d] == cells_[d];
        boundary_[i] = boundary_[i] || end;
        w *= end ? 0.5 * spacing_[d] : spacing_[d];
      }
      node_weight_[i] = w;
      if (!boundary_[i]) {
        unknown_[i] = static_cast<std::ptrdiff_t>(interior_.size());
        interior_.push_back(i);
      }
    }
    for (std::size_t axis = 0; axis < dim(); ++axis) {
      for (std::size_t i = 0; i < node_count_; ++i) {
        const auto idx = multi_index(i);
        if (idx[axis] == cells_[axis]) continue;
        double w = spacing_[axis];
        for (std::size_t d = 0; d < dim(); ++d) {
          if (d == axis) continue;
          const bool end = idx[d] == 0 || idx[d] == cells_[d];
          w *= end ? 0.5 * spacing_[d] : spacing_[d];
        }
        edges_.push_back(Edge{i, i + stride_[axis], axis});
        edge_weight_.push_back(w);
      }
    }
  }

  std::vector<std::pair<double, double>> box_;
  std::vector<std::size_t> cells_;
  std::array<double, 3> spacing_{0.0, 0.0, 0.0};
  std::array<std::size_t, 3> stride_{1, 1, 1};
  std::size_t node_count_ = 0;
  std::vector<bool> boundary_;
  std::vector<std::ptrdiff_t> unknown_;
  std::vector<std::size_t> interior_;
  std::vector<double> node_weight_;
  std::vector<Edge> edges_;
  std::vector<double> edge_weight_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(std::vector<std::pair<double, double>> box, std::vector<std::size_t> cells) {
  return std::make_shared<const Grid>(std::move(box), std::move(cells));
}

/// Nodal values of a scalar field on a grid.
struct GridFunction {
  GridPtr grid;
  Eigen::VectorXd values;

  GridFunction() = default;
  explicit GridFunction(GridPtr g) : grid(std::move(g)), values(Eigen::VectorXd::Zero(grid->node_count())) {}
  GridFunction(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
    if (static_cast<std::size_t>(values.size()) != grid->node_count())
      throw ConfigError("grid function: value count does not match node count");
  }

  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }

  /// True when every boundary node holds exactly zero.
  bool respects_boundary() const {
    for (std::size_t i = 0; i < grid->node_count(); ++i)
      if (grid->on_boundary(i) && values[static_cast<Eigen::Index>(i)] != 0.0) return false;
    return true;
  }
};

/// Per-edge values, typically the two-point gradient of a grid function.
struct EdgeField {
  GridPtr grid;
  Eigen::VectorXd values;
};

inline void zero_boundary(const Grid& grid, Eigen::VectorXd& v) {
  for (std::size_t i = 0; i < grid.node_count(); ++i)
    if (grid.on_boundary(i)) v[static_cast<Eigen::Index>(i)] = 0.0;
}

}  // namespace pxlap
