#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pxlap/elliptic_step.hpp"
#include "pxlap/function_spaces.hpp"
#include "pxlap/problem.hpp"
#include "pxlap/spatial_operator.hpp"
#include "pxlap/truncation.hpp"

namespace pxlap {

/// (1/eta) int_t^{t+eta} f(x, s) ds at every node, by 4-point Gauss-Legendre in s.
inline Eigen::VectorXd steklov_average(const SpaceTimeField& f, const Grid& grid, double eta, double t) {
  if (!(eta > 0.0)) throw ConfigError("steklov_average: eta must be > 0");
  static constexpr std::array<double, 4> xi{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                            0.8611363115940526};
  static constexpr std::array<double, 4> wt{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                            0.3478548451374538};
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.node_count()));
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 4; ++k) acc += wt[k] * f(i, t + 0.5 * eta * (1.0 + xi[k]));
    out[static_cast<Eigen::Index>(i)] = 0.5 * acc;
  }
  return out;
}

/// f_n = T_n(f) pointwise.
inline SpaceTimeField truncated_forcing(SpaceTimeField f, double n) {
  return [f = std::move(f), n](std::size_t node, double t) {
    const double v = f(node, t);
    if (v < 0.0) throw ConfigError("forcing f must be >= 0 (node " + std::to_string(node) + ")");
    return truncate(v, n);
  };
}

/**
 * How the power term lambda h_n(.) enters step m: `lagged` uses w^{(m-1)} of the
 * same trajectory (the Rothe scheme); `implicit` means the trajectory is meant to
 * satisfy the equation with h_n(w^{(m)}), as the limit of the monotone ladder does.
 */
enum class PowerCoupling { lagged, implicit };

/// A discrete solution w^{(0)}, ..., w^{(M)} on the uniform time grid t_m = m eta.
struct Trajectory {
  ProblemPtr spec;  // data actually used (f may be an enlarged forcing)
  double n = 1.0;
  double lambda = 0.0;
  double beta = 0.0;
  PowerCoupling coupling = PowerCoupling::lagged;
  SpaceTimeSamples states;
  std::vector<NewtonReport> reports;  // reports[m-1] belongs to step m

  std::size_t M() const { return states.steps(); }
  double eta() const { return states.eta; }
  double time(std::size_t m) const { return states.time(m); }
  const Eigen::VectorXd& step(std::size_t m) const { return states.slices.at(m); }
  const Grid& grid() const { return *states.grid; }
  GridFunction slice(std::size_t m) const { return GridFunction(states.grid, states.slices.at(m)); }
};

/// Step-level failure during a time march; carries the converged prefix.
class RotheFailure : public std::runtime_error {
public:
  RotheFailure(const std::string& what, Trajectory partial, std::size_t failed_step, NewtonReport report)
      : std::runtime_error(what), partial_(std::move(partial)), failed_step_(failed_step),
        report_(std::move(report)) {}

  const Trajectory& partial() const { return partial_; }
  std::size_t failed_step() const { return failed_step_; }
  const NewtonReport& report() const { return report_; }
  /// Time of the last converged state.
  double last_safe_time() const { return partial_.time(partial_.M()); }

private:
  Trajectory partial_;
  std::size_t failed_step_;
  NewtonReport report_;
};

struct RotheOptions {
  NewtonOptions newton;
  std::optional<double> lambda;               // defaults to spec.lambda
  std::optional<double> beta;                 // defaults to spec.beta
  std::optional<Eigen::VectorXd> initial;     // untruncated initial datum; defaults to spec.u0
  const Trajectory* frozen_power = nullptr;   // power term taken from this trajectory at the same step index
};

/// Nodal lambda h_n(w) with q at the nodes.
inline Eigen::VectorXd power_source(const ProblemSpec& spec, const Eigen::VectorXd& w, double lambda, double n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
  if (lambda == 0.0) return out;
  const Eigen::VectorXd q = spec.q.sample_nodes(*spec.grid);
  for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = lambda * power_truncation(w[i], q[i], n);
  return out;
}

/// beta [f_n]_eta((m-1) eta), the forcing of step m.
inline Eigen::VectorXd forcing_source(const ProblemSpec& spec, double beta, double n, double eta, std::size_t m) {
  if (beta == 0.0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.grid->node_count()));
  Eigen::VectorXd s = steklov_average(truncated_forcing(spec.f, n), *spec.grid, eta, eta * static_cast<double>(m - 1));
  zero_boundary(*spec.grid, s);
  return beta * s;
}

/// The frozen source S^m of step m as the trajectory's coupling prescribes.
inline Eigen::VectorXd step_source(const Trajectory& traj, std::size_t m) {
  const Eigen::VectorXd& power_arg = traj.coupling == PowerCoupling::lagged ? traj.step(m - 1) : traj.step(m);
  return power_source(*traj.spec, power_arg, traj.lambda, traj.n) +
         forcing_source(*traj.spec, traj.beta, traj.n, traj.eta(), m);
}

/// T_n of a nodal datum with zero boundary values.
inline Eigen::VectorXd truncated_initial(const Grid& grid, const Eigen::VectorXd& u0, double n) {
  Eigen::VectorXd w = u0.unaryExpr([n](double v) { return truncate(v, n); });
  zero_boundary(grid, w);
  return w;
}

/**
 * Implicit-Euler time march: M sequential step solves from w^{(0)} = T_n(u0).
 *
 * Step m solves
 *   (w - w^{(m-1)})/eta - Delta_p w = lambda h_n(P^m) + g (w + 1/n)^{-delta} + beta [f_n]_eta((m-1) eta)
 * where P^m = w^{(m-1)} (lagged) or, with `frozen_power`, the frozen trajectory's state m.
 */
inline Trajectory run_rothe(const ProblemPtr& spec, double n, std::size_t M, const RotheOptions& opt = {}) {
  if (!(n >= 1.0)) throw ConfigError("run_rothe: n must be >= 1");
  if (M < 1) throw ConfigError("run_rothe: M must be >= 1");
  spec->validate();
  const Grid& grid = *spec->grid;

  Trajectory traj;
  traj.spec = spec;
  traj.n = n;
  traj.lambda = opt.lambda.value_or(spec->lambda);
  traj.beta = opt.beta.value_or(spec->beta);
  traj.coupling = opt.frozen_power ? PowerCoupling::implicit : PowerCoupling::lagged;
  traj.states.grid = spec->grid;
  traj.states.eta = spec->T / static_cast<double>(M);
  traj.states.slices.reserve(M + 1);
  traj.states.slices.push_back(truncated_initial(grid, opt.initial.value_or(spec->u0), n));

  if (opt.frozen_power) {
    const Trajectory& fp = *opt.frozen_power;
    if (fp.M() != M || !fp.grid().same_discretization(grid))
      throw ConfigError("run_rothe: frozen power trajectory has a different discretization");
  }

  const double eta = traj.eta();
  for (std::size_t m = 1; m <= M; ++m) {
    const Eigen::VectorXd& prev = traj.states.slices.back();
    const Eigen::VectorXd& power_arg = opt.frozen_power ? opt.frozen_power->step(m) : prev;
    Eigen::VectorXd source =
        power_source(*spec, power_arg, traj.lambda, n) + forcing_source(*spec, traj.beta, n, eta, m);
    const StepSystem sys = StepSystem::make(spec->grid, prev, eta, std::move(source), spec->g, n, spec->p, spec->delta);
    try {
      StepSolution sol = solve_step(sys, std::nullopt, opt.newton);
      traj.states.slices.push_back(std::move(sol.w));
      traj.reports.push_back(std::move(sol.report));
    } catch (const NonConvergenceError& e) {
      throw RotheFailure("run_rothe: step " + std::to_string(m) + " failed: " + e.what(), traj, m, e.report());
    }
  }
  return traj;
}

enum class Interpolant { piecewise_constant, piecewise_linear };

/**
 * The two time interpolants of the discrete states. The constant one takes the
 * value w^{(m)} on (t_{m-1}, t_m] and w^{(0)} at t = 0; the linear one joins
 * consecutive states. Both return w^{(m)} at t = t_m.
 */
inline Eigen::VectorXd eval_trajectory(const Trajectory& traj, double t, Interpolant mode) {
  const double T = traj.time(traj.M());
  const double slack = 1e-12 * T;
  if (!(t >= -slack && t <= T + slack)) throw RangeError("eval_trajectory: t outside [0, T]");
  t = std::clamp(t, 0.0, T);
  const double s = t / traj.eta();
  const double nearest = std::round(s);
  if (std::abs(s - nearest) <= 1e-9) return traj.step(static_cast<std::size_t>(nearest));
  const auto m = static_cast<std::size_t>(std::ceil(s));
  if (mode == Interpolant::piecewise_constant) return traj.step(m);
  const double theta = (t - traj.time(m - 1)) / traj.eta();
  return traj.step(m - 1) + theta * (traj.step(m) - traj.step(m - 1));
}

struct BarrierReport {
  bool passed = true;
  double margin = std::numeric_limits<double>::infinity();  // min over (m, interior node) of v - w
  std::optional<std::size_t> violation_step;
  std::optional<std::size_t> violation_node;
  double forcing_bound = 0.0;  // M_n
  Trajectory barrier;
};

/**
 * Supersolution barrier: solves the same scheme with the constant source
 * lambda n + n^{delta(x)} g + beta M_n, no singular term, and v^{(0)} = n in the
 * interior, then checks w^{(m)} <= v^{(m)} + tol at every node and step.
 */
inline BarrierReport barrier_check(const Trajectory& traj, double tol = 1e-9, const NewtonOptions& newton = {}) {
  const ProblemSpec& spec = *traj.spec;
  const Grid& grid = traj.grid();
  const double n = traj.n;
  const double eta = traj.eta();

  BarrierReport rep;
  double Mn = 0.0;
  if (traj.beta != 0.0) {
    for (std::size_t m = 1; m <= traj.M(); ++m) {
      Eigen::VectorXd s = steklov_average(truncated_forcing(spec.f, n), grid, eta, eta * static_cast<double>(m - 1));
      zero_boundary(grid, s);
      Mn = std::max(Mn, s.maxCoeff());
    }
  }
  rep.forcing_bound = Mn;

  const Eigen::VectorXd delta = spec.delta.sample_nodes(grid);
  Eigen::VectorXd source(static_cast<Eigen::Index>(grid.node_count()));
  for (Eigen::Index i = 0; i < source.size(); ++i)
    source[i] = traj.lambda * n + std::pow(n, delta[i]) * spec.g[i] + traj.beta * Mn;
  zero_boundary(grid, source);

  Trajectory& v = rep.barrier;
  v.spec = traj.spec;
  v.n = n;
  v.states.grid = traj.states.grid;
  v.states.eta = eta;
  Eigen::VectorXd v0 = Eigen::VectorXd::Constant(source.size(), n);
  zero_boundary(grid, v0);
  v.states.slices.push_back(v0);
  const Eigen::VectorXd no_g = Eigen::VectorXd::Zero(source.size());
  for (std::size_t m = 1; m <= traj.M(); ++m) {
    const StepSystem sys = StepSystem::make(traj.states.grid, v.states.slices.back(), eta, source, no_g, n,
                                            spec.p, spec.delta);
    StepSolution sol = solve_step(sys, std::nullopt, newton);
    v.states.slices.push_back(std::move(sol.w));
    v.reports.push_back(std::move(sol.report));
  }

  for (std::size_t m = 0; m <= traj.M(); ++m) {
    const Eigen::VectorXd diff = v.step(m) - traj.step(m);
    for (std::size_t node : grid.interior_nodes()) {
      const auto i = static_cast<Eigen::Index>(node);
      if (diff[i] < rep.margin) rep.margin = diff[i];
      if (rep.passed && diff[i] < -tol) {
        rep.passed = false;
        rep.violation_step = m;
        rep.violation_node = static_cast<std::size_t>(i);
      }
    }
  }
  return rep;
}

/// sum_{m>=1} eta rho(grad w^{(m)}): the discrete V^{p(.)}(Q_T) modular.
inline double gradient_modular(const Trajectory& traj) {
  double sum = 0.0;
  for (std::size_t m = 1; m <= traj.M(); ++m)
    sum += traj.eta() * modular_rho(discrete_gradient(traj.slice(m)), traj.spec->p);
  return sum;
}

/// sum_{m>=1} eta t_m ||(w^{(m)} - w^{(m-1)}) / eta||_{L^2}^2.
inline double weighted_time_derivative(const Trajectory& traj) {
  double sum = 0.0;
  for (std::size_t m = 1; m <= traj.M(); ++m) {
    const double l2 = lebesgue_norm(traj.grid(), (traj.step(m) - traj.step(m - 1)) / traj.eta(), 2.0);
    sum += traj.eta() * traj.time(m) * l2 * l2;
  }
  return sum;
}

/// max_m ||w^{(m)} - w^{(m-1)}||_{L^2}, which bounds the gap between the two interpolants.
inline double interpolant_gap(const Trajectory& traj) {
  double gap = 0.0;
  for (std::size_t m = 1; m <= traj.M(); ++m)
    gap = std::max(gap, lebesgue_norm(traj.grid(), traj.step(m) - traj.step(m - 1), 2.0));
  return gap;
}

/// Formats a double with 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV snapshot dump: header `m,t_m,node_index,value`, one row per (step, node).
inline void write_snapshots(const Trajectory& traj, std::ostream& os) {
  os << "m,t_m,node_index,value\n";
  for (std::size_t m = 0; m <= traj.M(); ++m) {
    const std::string t = format_double(traj.time(m));
    const Eigen::VectorXd& w = traj.step(m);
    for (Eigen::Index i = 0; i < w.size(); ++i) os << m << ',' << t << ',' << i << ',' << format_double(w[i]) << '\n';
  }
}

}  // namespace pxlap
