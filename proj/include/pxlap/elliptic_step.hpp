#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "pxlap/spatial_operator.hpp"

namespace pxlap {

struct NewtonOptions {
  double tol = 1e-10;       // on the infinity norm of the weighted residual
  int max_iter = 50;        // Newton updates
  double armijo = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-20;
};

struct NewtonReport {
  int iterations = 0;  // residual evaluations, the last one being the converged check
  double final_residual = 0.0;
  std::vector<double> energy_trace;
  int line_search_backtracks = 0;
  bool converged = false;
  double negative_part = 0.0;     // max(-w) before projection
  bool projected = false;         // small negative part clipped to zero
  bool negative_flagged = false;  // negative part too large to clip; left in place
  std::string failure;
};

class NonConvergenceError : public std::runtime_error {
public:
  NonConvergenceError(const std::string& what, NewtonReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const NewtonReport& report() const { return report_; }

private:
  NewtonReport report_;
};

struct StepSolution {
  Eigen::VectorXd w;
  NewtonReport report;
};

/// max(w_prev, 0) with zero boundary values.
inline Eigen::VectorXd default_initial_guess(const StepSystem& sys) {
  Eigen::VectorXd w = sys.w_prev.cwiseMax(0.0);
  zero_boundary(*sys.grid, w);
  return w;
}

namespace detail {

inline std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace detail

/**
 * Minimizes the step energy by Newton's method with Armijo backtracking.
 *
 * Steps are first shortened until every node carrying a singular term stays
 * above -1/n + kSingularGuard. The energy trace is J(w0) followed by accumulated
 * accepted decrements, so it is nonincreasing by construction. Throws
 * NonConvergenceError (carrying the report) after max_iter updates.
 */
inline StepSolution solve_step(const StepSystem& sys, std::optional<Eigen::VectorXd> w_init = std::nullopt,
                               const NewtonOptions& opt = {}) {
  const Grid& grid = *sys.grid;
  Eigen::VectorXd w = w_init ? *w_init : default_initial_guess(sys);
  zero_boundary(grid, w);

  NewtonReport rep;
  double J = step_energy(sys, w);
  rep.energy_trace.push_back(J);

  const double floor = -1.0 / sys.n + kSingularGuard;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool pattern_ready = false;

  for (int update = 0;; ++update) {
    const Eigen::VectorXd grad = step_gradient(sys, w);
    rep.iterations += 1;
    rep.final_residual = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (rep.final_residual <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (update >= opt.max_iter) {
      rep.failure = "maximum Newton iterations reached";
      throw NonConvergenceError("solve_step: no convergence after " + std::to_string(opt.max_iter) +
                                    " iterations (residual " + detail::short_double(rep.final_residual) + ")",
                                rep);
    }

    const Eigen::SparseMatrix<double> H = step_hessian(sys, w);
    if (!pattern_ready) {
      ldlt.analyzePattern(H);
      pattern_ready = true;
    }
    ldlt.factorize(H);
    if (ldlt.info() != Eigen::Success) {
      rep.failure = "Hessian factorization failed";
      throw NonConvergenceError("solve_step: Hessian factorization failed", rep);
    }
    const Eigen::VectorXd g_int = to_unknowns(grid, grad);
    const Eigen::VectorXd d = from_unknowns(grid, ldlt.solve(-g_int));
    const double slope = grad.dot(d);

    double alpha = 1.0;
    for (std::size_t i : grid.interior_nodes()) {
      const auto k = static_cast<Eigen::Index>(i);
      if (sys.g[k] <= 0.0 || d[k] >= 0.0) continue;
      while (w[k] + alpha * d[k] <= floor) {
        alpha *= opt.backtrack;
        rep.line_search_backtracks += 1;
      }
    }

    double dJ = 0.0;
    while (true) {
      dJ = step_energy_change(sys, w, alpha * d);
      if (dJ <= opt.armijo * alpha * slope) break;
      alpha *= opt.backtrack;
      rep.line_search_backtracks += 1;
      if (alpha < opt.min_step) {
        rep.failure = "line search stalled";
        throw NonConvergenceError("solve_step: line search stalled (residual " +
                                      detail::short_double(rep.final_residual) + ")",
                                  rep);
      }
    }
    w += alpha * d;
    J += dJ;
    rep.energy_trace.push_back(J);
  }

  double min_w = 0.0;
  for (std::size_t i : grid.interior_nodes()) min_w = std::min(min_w, w[static_cast<Eigen::Index>(i)]);
  rep.negative_part = -min_w;
  if (rep.negative_part > 0.0) {
    if (rep.negative_part < 10.0 * opt.tol) {
      w = w.cwiseMax(0.0);
      rep.projected = true;
    } else {
      rep.negative_flagged = true;
    }
  }
  return {std::move(w), std::move(rep)};
}

}  // namespace pxlap
