#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "pxlap/elliptic_step.hpp"
#include "pxlap/errors.hpp"
#include "pxlap/field.hpp"
#include "pxlap/grid.hpp"
#include "pxlap/problem.hpp"

namespace pxlap {

using json = nlohmann::json;

struct SweepSettings {
  std::string axis;  // "n", "M" or "h"
  std::vector<double> values;
};

/// Experiment settings read from the optional "run" object of a problem file.
struct RunSettings {
  double n = 1.0;
  std::size_t M = 16;
  NewtonOptions newton;
  std::vector<double> etas;      // tail thresholds for the L^inf ledger entries
  std::vector<double> k_values;  // truncation levels for the energy ledger
  std::optional<SweepSettings> sweep;
  std::string reference;         // "" or "heat_sine"
  std::optional<Eigen::VectorXd> v0;
  std::size_t j_max = 30;
  double ladder_tol = 1e-8;
  double check_tol = 1e-8;       // comparison and monotonicity checks
  double barrier_tol = 1e-7;
  double min_order = 0.9;        // required observed order when "order" is checked
  std::vector<std::string> checks;

  bool wants(const std::string& check) const {
    for (const auto& c : checks)
      if (c == check) return true;
    return false;
  }
};

struct Config {
  json raw;
  ProblemPtr spec;
  RunSettings run;
};

namespace detail {

inline const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing field '") + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError("config: '" + what + "' must be a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError("config: '" + what + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

}  // namespace detail

/**
 * Field syntax: {"const": v}, {"affine": [a, b1, ..., bN]} for a + b.x,
 * {"table": [one value per node]}, {"sine": A} for A prod_d sin(pi (x_d - a_d)/L_d).
 * A bare number is shorthand for "const".
 */
inline SpatialField parse_field(const json& j, const Grid& grid, const std::string& name) {
  if (j.is_number()) return SpatialField::constant(j.get<double>());
  if (!j.is_object()) throw ConfigError("config: field '" + name + "' must be a number or an object");
  SpatialField f = SpatialField::constant(0.0);
  int kinds = 0;
  if (j.contains("const")) {
    f = SpatialField::constant(detail::number(j.at("const"), name + ".const"));
    ++kinds;
  }
  if (j.contains("affine")) {
    const auto c = detail::numbers(j.at("affine"), name + ".affine");
    if (c.empty()) throw ConfigError("config: '" + name + ".affine' needs at least the constant term");
    f = SpatialField::affine(c[0], std::vector<double>(c.begin() + 1, c.end()));
    ++kinds;
  }
  if (j.contains("table")) {
    f = SpatialField::table(detail::numbers(j.at("table"), name + ".table"));
    ++kinds;
  }
  if (j.contains("sine")) {
    f = SpatialField::sine(detail::number(j.at("sine"), name + ".sine"));
    ++kinds;
  }
  if (kinds != 1) throw ConfigError("config: field '" + name + "' must give exactly one of const, affine, table, sine");
  f.check_evaluable(grid);
  for (std::size_t i = 0; i < grid.node_count(); ++i)
    if (!std::isfinite(f.at_node(grid, i)))
      throw ConfigError("config: field '" + name + "' is not finite at node " + std::to_string(i));
  return f;
}

/// Time factor of f: {"exp": k} gives e^{k t}, {"linear": [a, b]} gives a + b t.
inline std::function<double(double)> parse_time_profile(const json& j) {
  if (j.contains("exp")) {
    const double k = detail::number(j.at("exp"), "f.time.exp");
    return [k](double t) { return std::exp(k * t); };
  }
  if (j.contains("linear")) {
    const auto c = detail::numbers(j.at("linear"), "f.time.linear");
    if (c.size() != 2) throw ConfigError("config: 'f.time.linear' needs [a, b]");
    return [a = c[0], b = c[1]](double t) { return a + b * t; };
  }
  throw ConfigError("config: 'f.time' must be {\"exp\": k} or {\"linear\": [a, b]}");
}

inline Regime parse_regime(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "A") return Regime::A;
  if (s == "B") return Regime::B;
  if (s == "none") return Regime::none;
  throw ConfigError("config: regime must be \"A\", \"B\" or \"none\"");
}

/// Builds the problem; `cells_override` replaces the resolution on every axis.
inline ProblemPtr build_problem(const json& j, std::optional<std::size_t> cells_override = std::nullopt) {
  const auto dim = static_cast<std::size_t>(detail::number(detail::require(j, "dim"), "dim"));
  const json& box_j = detail::require(j, "box");
  const json& res_j = detail::require(j, "resolution");
  if (!box_j.is_array() || box_j.size() != dim) throw ConfigError("config: 'box' needs one [lo, hi] pair per axis");
  if (!res_j.is_array() || res_j.size() != dim) throw ConfigError("config: 'resolution' needs one cell count per axis");
  std::vector<std::pair<double, double>> box;
  std::vector<std::size_t> cells;
  for (std::size_t d = 0; d < dim; ++d) {
    const auto b = detail::numbers(box_j[d], "box");
    if (b.size() != 2) throw ConfigError("config: each 'box' entry must be [lo, hi]");
    box.emplace_back(b[0], b[1]);
    const double c = cells_override ? static_cast<double>(*cells_override) : detail::number(res_j[d], "resolution");
    if (c < 2.0 || c != std::floor(c)) throw ConfigError("config: resolution entries must be integers >= 2");
    cells.push_back(static_cast<std::size_t>(c));
  }
  GridPtr grid = make_grid(std::move(box), std::move(cells));

  auto spec = std::make_shared<ProblemSpec>();
  spec->grid = grid;
  spec->p = parse_field(detail::require(j, "p"), *grid, "p");
  spec->q = parse_field(detail::require(j, "q"), *grid, "q");
  spec->delta = parse_field(detail::require(j, "delta"), *grid, "delta");

  const json& g_j = detail::require(j, "g");
  if (g_j.is_object() && g_j.contains("time")) throw ConfigError("config: g is spatial only; 'time' is not allowed");
  spec->g = parse_field(g_j, *grid, "g").sample_nodes(*grid);

  if (j.contains("f")) {
    const json& f_j = j.at("f");
    json spatial = f_j;
    std::function<double(double)> profile = [](double) { return 1.0; };
    if (f_j.is_object() && f_j.contains("time")) {
      profile = parse_time_profile(f_j.at("time"));
      spatial.erase("time");
    }
    const Eigen::VectorXd fx = parse_field(spatial, *grid, "f").sample_nodes(*grid);
    spec->f = [fx, profile](std::size_t node, double t) { return fx[static_cast<Eigen::Index>(node)] * profile(t); };
  } else {
    spec->f = zero_forcing();
  }
  spec->u0 = parse_field(detail::require(j, "u0"), *grid, "u0").sample_nodes(*grid);
  spec->lambda = j.contains("lambda") ? detail::number(j.at("lambda"), "lambda") : 0.0;
  spec->beta = j.contains("beta") ? detail::number(j.at("beta"), "beta") : 1.0;
  spec->T = detail::number(detail::require(j, "T"), "T");
  spec->r = j.contains("r") ? detail::number(j.at("r"), "r") : 2.0;
  spec->regime = j.contains("regime") ? parse_regime(j.at("regime")) : Regime::none;
  spec->validate();
  return spec;
}

inline RunSettings parse_run_settings(const json& j, const Grid& grid) {
  RunSettings s;
  if (!j.contains("run")) return s;
  const json& r = j.at("run");
  if (r.contains("n")) s.n = detail::number(r.at("n"), "run.n");
  if (r.contains("M")) {
    const double M = detail::number(r.at("M"), "run.M");
    if (M < 1.0 || M != std::floor(M)) throw ConfigError("config: run.M must be a positive integer");
    s.M = static_cast<std::size_t>(M);
  }
  if (r.contains("tol")) s.newton.tol = detail::number(r.at("tol"), "run.tol");
  if (r.contains("max_iter")) s.newton.max_iter = static_cast<int>(detail::number(r.at("max_iter"), "run.max_iter"));
  if (r.contains("etas")) s.etas = detail::numbers(r.at("etas"), "run.etas");
  if (r.contains("k_values")) s.k_values = detail::numbers(r.at("k_values"), "run.k_values");
  if (r.contains("sweep")) {
    const json& sw = r.at("sweep");
    SweepSettings ss;
    ss.axis = detail::require(sw, "axis").get<std::string>();
    if (ss.axis != "n" && ss.axis != "M" && ss.axis != "h")
      throw ConfigError("config: run.sweep.axis must be \"n\", \"M\" or \"h\"");
    ss.values = detail::numbers(detail::require(sw, "values"), "run.sweep.values");
    if (ss.values.empty()) throw ConfigError("config: run.sweep.values is empty");
    for (std::size_t i = 1; i < ss.values.size(); ++i)
      if (!(ss.values[i] > ss.values[i - 1])) throw ConfigError("config: run.sweep.values must be strictly ascending");
    s.sweep = std::move(ss);
  }
  if (r.contains("reference")) {
    s.reference = r.at("reference").get<std::string>();
    if (s.reference != "heat_sine") throw ConfigError("config: unknown reference '" + s.reference + "'");
  }
  if (r.contains("v0")) s.v0 = parse_field(r.at("v0"), grid, "run.v0").sample_nodes(grid);
  if (r.contains("ladder")) {
    const json& l = r.at("ladder");
    if (l.contains("j_max")) s.j_max = static_cast<std::size_t>(detail::number(l.at("j_max"), "run.ladder.j_max"));
    if (l.contains("tol")) s.ladder_tol = detail::number(l.at("tol"), "run.ladder.tol");
  }
  if (r.contains("check_tol")) s.check_tol = detail::number(r.at("check_tol"), "run.check_tol");
  if (r.contains("barrier_tol")) s.barrier_tol = detail::number(r.at("barrier_tol"), "run.barrier_tol");
  if (r.contains("min_order")) s.min_order = detail::number(r.at("min_order"), "run.min_order");
  if (r.contains("checks"))
    for (const auto& c : r.at("checks")) s.checks.push_back(c.get<std::string>());
  if (!(s.n >= 1.0)) throw ConfigError("config: run.n must be >= 1");
  return s;
}

inline Config parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  Config c;
  c.raw = j;
  c.spec = build_problem(j);
  c.run = parse_run_settings(j, *c.spec->grid);
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

/**
 * Exact solution A e^{-pi^2 sum_d L_d^{-2} t} prod_d sin(pi (x_d - a_d)/L_d) of the
 * heat equation with zero forcing, for u0 = {"sine": A}.
 */
inline Eigen::VectorXd heat_sine_exact(const Grid& grid, double amplitude, double t) {
  double rate = 0.0;
  for (std::size_t d = 0; d < grid.dim(); ++d) {
    const auto [a, b] = grid.extent(d);
    rate += std::numbers::pi * std::numbers::pi / ((b - a) * (b - a));
  }
  const SpatialField s = SpatialField::sine(amplitude * std::exp(-rate * t));
  Eigen::VectorXd v = s.sample_nodes(grid);
  zero_boundary(grid, v);
  return v;
}

/// Amplitude of a "heat_sine" reference; fails unless the problem is the plain heat equation.
inline double heat_sine_amplitude(const json& j) {
  const json& u0 = detail::require(j, "u0");
  if (!u0.is_object() || !u0.contains("sine")) throw ConfigError("config: reference heat_sine needs u0 = {\"sine\": A}");
  const json& p = detail::require(j, "p");
  const bool p_two = (p.is_number() && p.get<double>() == 2.0) ||
                     (p.is_object() && p.contains("const") && p.at("const").get<double>() == 2.0);
  if (!p_two) throw ConfigError("config: reference heat_sine needs p = 2");
  if (j.contains("lambda") && j.at("lambda").get<double>() != 0.0)
    throw ConfigError("config: reference heat_sine needs lambda = 0");
  return u0.at("sine").get<double>();
}

}  // namespace pxlap
