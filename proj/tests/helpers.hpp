#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "pxlap/pxlap.hpp"

namespace testkit {

using pxlap::ExponentField;
using pxlap::GridPtr;
using pxlap::ProblemPtr;
using pxlap::ProblemSpec;

inline GridPtr unit_interval(std::size_t cells) { return pxlap::make_grid({{0.0, 1.0}}, {cells}); }

inline GridPtr unit_square(std::size_t cells) { return pxlap::make_grid({{0.0, 1.0}, {0.0, 1.0}}, {cells, cells}); }

/// Nodal samples of a field with zero boundary values.
inline Eigen::VectorXd interior_samples(const pxlap::Grid& grid, const pxlap::SpatialField& f) {
  Eigen::VectorXd v = f.sample_nodes(grid);
  pxlap::zero_boundary(grid, v);
  return v;
}

/// Heat-type problem on `grid`: p = 2, no power or singular term, constant forcing `f`.
inline std::shared_ptr<ProblemSpec> heat_problem(GridPtr grid, double f, double T) {
  auto s = std::make_shared<ProblemSpec>();
  s->grid = grid;
  s->p = ExponentField::constant(2.0);
  s->q = ExponentField::constant(2.0);
  s->delta = ExponentField::constant(0.5);
  s->g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid->node_count()));
  s->f = [f](std::size_t, double) { return f; };
  s->u0 = interior_samples(*grid, pxlap::SpatialField::sine(1.0));
  s->lambda = 0.0;
  s->beta = 1.0;
  s->T = T;
  return s;
}

/// Regime-A problem on the unit square: p = 1.8, q = 2, delta = 0.5, lambda = 0.5.
inline std::shared_ptr<ProblemSpec> regime_a_problem(std::size_t cells, double T) {
  GridPtr grid = unit_square(cells);
  auto s = std::make_shared<ProblemSpec>();
  s->grid = grid;
  s->p = ExponentField::constant(1.8);
  s->q = ExponentField::constant(2.0);
  s->delta = ExponentField::constant(0.5);
  s->g = interior_samples(*grid, pxlap::SpatialField::constant(0.2));
  s->f = [](std::size_t, double) { return 0.5; };
  s->u0 = interior_samples(*grid, pxlap::SpatialField::sine(0.5));
  s->lambda = 0.5;
  s->beta = 1.0;
  s->T = T;
  s->r = 2.0;
  s->regime = pxlap::Regime::A;
  return s;
}

}  // namespace testkit
