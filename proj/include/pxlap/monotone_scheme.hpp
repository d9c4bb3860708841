#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pxlap/problem.hpp"
#include "pxlap/time_march.hpp"

namespace pxlap {

struct ComparisonReport {
  bool passed = true;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max over (m, node) of u - v
  std::size_t step = 0;
  std::size_t node = 0;
};

/// Checks u^{(m)} <= v^{(m)} + tol at every node and step.
inline ComparisonReport check_comparison(const Trajectory& u, const Trajectory& v, double tol) {
  if (u.M() != v.M() || u.eta() != v.eta() || u.n != v.n || !u.grid().same_discretization(v.grid()))
    throw ConfigError("check_comparison: trajectories use different discretizations");
  ComparisonReport rep;
  for (std::size_t m = 0; m <= u.M(); ++m) {
    const Eigen::VectorXd excess = u.step(m) - v.step(m);
    Eigen::Index i = 0;
    const double worst = excess.maxCoeff(&i);
    if (worst > rep.worst_excess) {
      rep.worst_excess = worst;
      rep.step = m;
      rep.node = static_cast<std::size_t>(i);
    }
  }
  rep.passed = rep.worst_excess <= tol;
  return rep;
}

/**
 * Monotone iteration u_{n,0} = 0, u_{n,j+1} solving the parabolic problem with the
 * power term frozen at u_{n,j} (same time index) and forcing f_n. Unless
 * `keep_all` is set only the last two iterates are stored; the scalar histories
 * cover every iteration.
 */
struct IterationLadder {
  std::vector<Trajectory> iterates;
  std::vector<double> sup_gaps;        // ||u_{j+1} - u_j||_inf over all nodes and steps
  std::vector<double> min_increments;  // min over nodes and steps of u_{j+1} - u_j
  bool converged = false;
  bool complete = false;  // iterates holds every u_{n,j}, starting from the zero trajectory

  const Trajectory& limit() const { return iterates.back(); }
};

struct LadderOptions {
  std::size_t j_max = 30;
  double tol = 1e-8;
  bool keep_all = false;
  NewtonOptions newton;
  std::function<void(std::size_t j, const Trajectory&)> observer;  // called for every new iterate
};

inline Trajectory zero_trajectory(const ProblemPtr& spec, double n, std::size_t M, double lambda, double beta) {
  Trajectory z;
  z.spec = spec;
  z.n = n;
  z.lambda = lambda;
  z.beta = beta;
  z.coupling = PowerCoupling::implicit;
  z.states.grid = spec->grid;
  z.states.eta = spec->T / static_cast<double>(M);
  z.states.slices.assign(M + 1, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec->grid->node_count())));
  return z;
}

inline IterationLadder run_monotone(const ProblemPtr& spec, double n, std::size_t M, const LadderOptions& opt = {}) {
  if (opt.j_max < 1) throw ConfigError("run_monotone: j_max must be >= 1");
  IterationLadder ladder;
  ladder.complete = opt.keep_all;
  ladder.iterates.push_back(zero_trajectory(spec, n, M, spec->lambda, 1.0));

  RotheOptions ro;
  ro.newton = opt.newton;
  ro.beta = 1.0;
  for (std::size_t j = 1; j <= opt.j_max; ++j) {
    ro.frozen_power = &ladder.iterates.back();
    Trajectory next = run_rothe(spec, n, M, ro);
    const Trajectory& prev = ladder.iterates.back();
    double gap = 0.0;
    double min_inc = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m <= M; ++m) {
      const Eigen::VectorXd d = next.step(m) - prev.step(m);
      gap = std::max(gap, d.cwiseAbs().maxCoeff());
      min_inc = std::min(min_inc, d.minCoeff());
    }
    ladder.sup_gaps.push_back(gap);
    ladder.min_increments.push_back(min_inc);
    if (opt.observer) opt.observer(j, next);
    if (!opt.keep_all && ladder.iterates.size() == 2) ladder.iterates.erase(ladder.iterates.begin());
    ladder.iterates.push_back(std::move(next));
    if (gap < opt.tol) {
      ladder.converged = true;
      break;
    }
  }
  return ladder;
}

struct MonotoneReport {
  bool passed = true;
  double worst_decrease = 0.0;  // max over j of -(min increment)
  std::size_t pair = 0;         // j of the worst pair (u_{j} vs u_{j-1})
};

/// Passes iff u_{n,j+1} >= u_{n,j} - tol at every node and step for every consecutive pair.
inline MonotoneReport check_monotone(const IterationLadder& ladder, double tol) {
  MonotoneReport rep;
  const auto consider = [&](std::size_t j, double min_inc) {
    if (-min_inc > rep.worst_decrease) {
      rep.worst_decrease = -min_inc;
      rep.pair = j;
    }
  };
  if (ladder.complete) {
    for (std::size_t j = 1; j < ladder.iterates.size(); ++j) {
      double min_inc = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m <= ladder.iterates[j].M(); ++m)
        min_inc = std::min(min_inc, (ladder.iterates[j].step(m) - ladder.iterates[j - 1].step(m)).minCoeff());
      consider(j, min_inc);
    }
  } else {
    for (std::size_t j = 0; j < ladder.min_increments.size(); ++j) consider(j + 1, ladder.min_increments[j]);
  }
  rep.passed = rep.worst_decrease <= tol;
  return rep;
}

/// Auxiliary supersolution problem: lambda = 0, beta = 2, initial datum v0 (default u0).
inline Trajectory solve_auxiliary(const ProblemPtr& spec, double n, std::size_t M,
                                  std::optional<Eigen::VectorXd> v0 = std::nullopt, const NewtonOptions& newton = {}) {
  if (v0) {
    if (v0->size() != spec->u0.size()) throw ConfigError("solve_auxiliary: v0 has wrong length");
    for (Eigen::Index i = 0; i < v0->size(); ++i)
      if ((*v0)[i] < spec->u0[i]) throw ConfigError("solve_auxiliary: v0 must dominate u0 nodewise");
  }
  RotheOptions ro;
  ro.newton = newton;
  ro.lambda = 0.0;
  ro.beta = 2.0;
  ro.initial = v0;
  return run_rothe(spec, n, M, ro);
}

/**
 * Copy of the problem with forcing max(f, v^{q-1}), where v is read through its
 * piecewise-constant interpolant (v^{(m)} on (t_{m-1}, t_m]).
 */
inline ProblemPtr enlarge_forcing(const ProblemSpec& base, const Trajectory& v) {
  auto out = std::make_shared<ProblemSpec>(base);
  const Eigen::VectorXd q = base.q.sample_nodes(*base.grid);
  const std::size_t M = v.M();
  std::vector<Eigen::VectorXd> floors;
  floors.reserve(M);
  for (std::size_t m = 1; m <= M; ++m) {
    Eigen::VectorXd fl(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) fl[i] = std::pow(std::max(v.step(m)[i], 0.0), q[i] - 1.0);
    floors.push_back(std::move(fl));
  }
  const double eta = v.eta();
  out->f = [f = base.f, floors = std::move(floors), eta, M](std::size_t node, double t) {
    const double s = std::ceil(t / eta - 1e-9);
    const auto m = static_cast<std::size_t>(std::clamp(s, 1.0, static_cast<double>(M)));
    return std::max(f(node, t), floors[m - 1][static_cast<Eigen::Index>(node)]);
  };
  return out;
}

/// Largest violation of h_n(v^{(m)}) <= [f_n]_eta((m-1) eta) over nodes and steps (<= 0 when it holds).
inline double forcing_floor_defect(const ProblemSpec& spec, const Trajectory& v) {
  const Eigen::VectorXd q = spec.q.sample_nodes(*spec.grid);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= v.M(); ++m) {
    const Eigen::VectorXd fm = forcing_source(spec, 1.0, v.n, v.eta(), m);
    for (std::size_t i : spec.grid->interior_nodes()) {
      const auto k = static_cast<Eigen::Index>(i);
      worst = std::max(worst, power_truncation(v.step(m)[k], q[k], v.n) - fm[k]);
    }
  }
  return worst;
}

struct MonotoneRun {
  ProblemPtr spec;  // problem with the enlarged forcing
  Trajectory auxiliary;
  IterationLadder ladder;
  std::size_t enlargements = 0;
  double floor_defect = 0.0;
  ComparisonReport domination;  // every ladder iterate against the auxiliary state
};

struct MonotoneRunOptions {
  LadderOptions ladder;
  std::size_t max_enlargements = 32;
  double floor_tol = 1e-10;
  double ladder_domination_tol = 1e-8;
  std::optional<Eigen::VectorXd> v0;
};

/**
 * Ladder under the forcing hypothesis f >= v^{q-1}: solve the auxiliary problem,
 * enlarge f to max(f, v^{q-1}), re-solve, and repeat until the enlarged forcing
 * dominates h_n of the re-solved auxiliary state (at least one enlargement).
 * Then runs the monotone ladder on the final problem.
 */
inline MonotoneRun run_monotone_enlarged(const ProblemPtr& spec, double n, std::size_t M,
                                         const MonotoneRunOptions& opt = {}) {
  MonotoneRun run;
  Trajectory v = solve_auxiliary(spec, n, M, opt.v0, opt.ladder.newton);
  ProblemPtr current = spec;
  for (std::size_t pass = 1; pass <= opt.max_enlargements; ++pass) {
    current = enlarge_forcing(*spec, v);
    v = solve_auxiliary(current, n, M, opt.v0, opt.ladder.newton);
    run.enlargements = pass;
    run.floor_defect = forcing_floor_defect(*current, v);
    if (run.floor_defect <= opt.floor_tol) break;
  }
  run.spec = current;
  run.auxiliary = std::move(v);
  run.domination.passed = true;
  LadderOptions lo = opt.ladder;
  lo.observer = [&run, &opt](std::size_t j, const Trajectory& u) {
    const ComparisonReport c = check_comparison(u, run.auxiliary, opt.ladder_domination_tol);
    if (c.worst_excess > run.domination.worst_excess) run.domination = c;
    run.domination.passed = run.domination.worst_excess <= opt.ladder_domination_tol;
    if (opt.ladder.observer) opt.ladder.observer(j, u);
  };
  run.ladder = run_monotone(current, n, M, lo);
  return run;
}

}  // namespace pxlap
