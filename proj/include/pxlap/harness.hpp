#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "pxlap/config.hpp"
#include "pxlap/estimates.hpp"
#include "pxlap/monotone_scheme.hpp"
#include "pxlap/time_march.hpp"

namespace pxlap {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_validation_failed = 2, exit_solver_failed = 3 };

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

/// Single writer for every output file of an invocation; records each file for the manifest.
class OutputCollector {
public:
  explicit OutputCollector(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    out << content;
    files_.push_back({name, sha256_hex(content), content.size()});
  }

  /// Writes manifest.json listing every file written so far with its SHA-256.
  void write_manifest(json meta) {
    json files = json::array();
    for (const auto& f : files_) files.push_back({{"file", f.name}, {"sha256", f.hash}, {"bytes", f.bytes}});
    meta["files"] = std::move(files);
    std::ofstream out(dir_ / "manifest.json");
    out << meta.dump(2) << '\n';
  }

  const std::filesystem::path& dir() const { return dir_; }

private:
  struct Entry {
    std::string name;
    std::string hash;
    std::size_t bytes;
  };
  std::filesystem::path dir_;
  std::vector<Entry> files_;
};

struct HarnessOverrides {
  std::optional<double> tol;
  std::optional<int> max_iter;
};

inline void apply_overrides(RunSettings& s, const HarnessOverrides& o) {
  if (o.tol) s.newton.tol = *o.tol;
  if (o.max_iter) s.newton.max_iter = *o.max_iter;
}

/// ||w^{(M)} - exact(T)||_inf for a "heat_sine" reference.
inline double reference_error(const Config& cfg, const Trajectory& traj) {
  const ProblemSpec& spec = *traj.spec;
  if (spec.g.cwiseAbs().maxCoeff() != 0.0) throw ConfigError("config: reference heat_sine needs g = 0");
  for (std::size_t i = 0; i < spec.grid->node_count(); ++i)
    if (spec.beta != 0.0 && spec.f(i, 0.0) != 0.0) throw ConfigError("config: reference heat_sine needs f = 0");
  const double A = heat_sine_amplitude(cfg.raw);
  const double T = traj.time(traj.M());
  return (traj.step(traj.M()) - heat_sine_exact(traj.grid(), A, T)).cwiseAbs().maxCoeff();
}

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string failure;
  double last_safe_time = 0.0;
  EstimateLedger ledger;
  std::optional<double> diff;       // n: ||u_{value} - u_{previous}||_{L1(Q_T)}; M: ||w(T) - w_prev(T)||_inf
  std::optional<double> ref_error;  // ||w(T) - exact(T)||_inf
  std::optional<double> order;      // observed order from the previous row
};

struct SweepTable {
  std::string axis;
  std::vector<SweepRow> rows;
};

/**
 * One run per sweep value (n, M, or cells per axis for h) with everything else
 * fixed. Rows run concurrently; a failed row is recorded and the sweep goes on.
 */
inline SweepTable sweep(const Config& cfg, const SweepSettings& sw) {
  struct Outcome {
    SweepRow row;
    std::optional<Trajectory> traj;
  };
  const auto run_one = [&cfg, &sw](double value) {
    Outcome o;
    o.row.value = value;
    try {
      ProblemPtr spec = cfg.spec;
      double n = cfg.run.n;
      std::size_t M = cfg.run.M;
      if (sw.axis == "n") n = value;
      if (sw.axis == "M") M = static_cast<std::size_t>(value);
      if (sw.axis == "h") spec = build_problem(cfg.raw, static_cast<std::size_t>(value));
      RotheOptions ro;
      ro.newton = cfg.run.newton;
      Trajectory traj = run_rothe(spec, n, M, ro);
      o.row.ledger = ledger(traj, spec->r, cfg.run.etas, cfg.run.k_values);
      if (cfg.run.reference == "heat_sine") o.row.ref_error = reference_error(cfg, traj);
      o.row.last_safe_time = traj.time(traj.M());
      o.row.ok = true;
      o.traj = std::move(traj);
    } catch (const RotheFailure& e) {
      o.row.failure = e.what();
      o.row.last_safe_time = e.last_safe_time();
    } catch (const std::exception& e) {
      o.row.failure = e.what();
    }
    return o;
  };

  std::vector<std::future<Outcome>> pending;
  for (double v : sw.values) pending.push_back(std::async(std::launch::async, run_one, v));
  std::vector<Outcome> done;
  for (auto& f : pending) done.push_back(f.get());

  SweepTable table;
  table.axis = sw.axis;
  for (std::size_t i = 0; i < done.size(); ++i) {
    SweepRow& row = done[i].row;
    if (i > 0 && row.ok && done[i - 1].row.ok) {
      const Trajectory& cur = *done[i].traj;
      const Trajectory& prev = *done[i - 1].traj;
      if (sw.axis == "n") row.diff = space_time_l1_distance(cur.states, prev.states);
      if (sw.axis == "M") row.diff = (cur.step(cur.M()) - prev.step(prev.M())).cwiseAbs().maxCoeff();
      const auto& pe = done[i - 1].row.ref_error;
      if (sw.axis != "n" && row.ref_error && pe && *row.ref_error > 0.0 && *pe > 0.0)
        row.order = std::log(*pe / *row.ref_error) / std::log(row.value / done[i - 1].row.value);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline std::string sweep_csv(const SweepTable& t) {
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream os;
  os << t.axis << ",status,last_safe_time,sup_L1,sup_Linf,gradient_modular,newton_iterations,diff,ref_error,order\n";
  for (const auto& r : t.rows) {
    os << format_double(r.value) << ',' << (r.ok ? "ok" : "failed") << ',' << format_double(r.last_safe_time) << ',';
    if (r.ok)
      os << format_double(r.ledger.sup_L1) << ',' << format_double(r.ledger.sup_Linf) << ','
         << format_double(r.ledger.gradient_modular) << ',' << r.ledger.newton.total_iterations;
    else
      os << ",,,";
    os << ',' << opt(r.diff) << ',' << opt(r.ref_error) << ',' << opt(r.order) << '\n';
  }
  return os.str();
}

/// Everything a verb needs besides the parsed configuration.
struct HarnessContext {
  OutputCollector& out;
  std::ostream& log;
  json& meta;
};

inline std::string ledger_csv(const EstimateLedger& L) {
  std::ostringstream os;
  write_ledger_csv(L, os);
  return os.str();
}

inline std::string snapshot_csv(const Trajectory& traj) {
  std::ostringstream os;
  write_snapshots(traj, os);
  return os.str();
}

inline int verb_run(const Config& cfg, HarnessContext& ctx) {
  RotheOptions ro;
  ro.newton = cfg.run.newton;
  const Trajectory traj = run_rothe(cfg.spec, cfg.run.n, cfg.run.M, ro);
  EstimateLedger L = ledger(traj, cfg.spec->r, cfg.run.etas, cfg.run.k_values);
  int code = exit_ok;
  if (cfg.run.wants("barrier")) {
    const BarrierReport b = barrier_check(traj, cfg.run.barrier_tol, cfg.run.newton);
    L.barrier_margin = b.margin;
    ctx.meta["checks"]["barrier"] = b.passed;
    if (!b.passed) code = exit_check_failed;
  }
  ctx.out.write("snapshots.csv", snapshot_csv(traj));
  ctx.out.write("ledger.csv", ledger_csv(L));
  if (cfg.run.reference == "heat_sine") {
    const double err = reference_error(cfg, traj);
    ctx.meta["reference_error"] = err;
    ctx.log << "reference error at T: " << format_double(err) << '\n';
  }
  ctx.log << "run: M = " << traj.M() << ", n = " << format_double(traj.n)
          << ", sup_Linf = " << format_double(L.sup_Linf) << '\n';
  return code;
}

inline int verb_sweep(const Config& cfg, HarnessContext& ctx) {
  if (!cfg.run.sweep) throw ConfigError("config: sweep verb needs run.sweep {axis, values}");
  const SweepTable t = sweep(cfg, *cfg.run.sweep);
  ctx.out.write("sweep.csv", sweep_csv(t));
  int code = exit_ok;
  for (const auto& r : t.rows)
    if (!r.ok) {
      ctx.log << "sweep row " << format_double(r.value) << " failed: " << r.failure
              << " (last safe T = " << format_double(r.last_safe_time) << ")\n";
      code = exit_check_failed;
    }
  if (cfg.run.wants("order")) {
    bool pass = true;
    for (const auto& r : t.rows)
      if (r.order && *r.order < cfg.run.min_order) pass = false;
    ctx.meta["checks"]["order"] = pass;
    if (!pass) code = exit_check_failed;
  }
  if (cfg.run.wants("cauchy") && t.axis == "n") {
    bool pass = true;
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      if (t.rows[i].diff && t.rows[i - 1].diff && *t.rows[i].diff > *t.rows[i - 1].diff) pass = false;
    ctx.meta["checks"]["cauchy"] = pass;
    if (!pass) code = exit_check_failed;
  }
  ctx.log << sweep_csv(t);
  return code;
}

inline int verb_monotone(const Config& cfg, HarnessContext& ctx) {
  MonotoneRunOptions mo;
  mo.ladder.j_max = cfg.run.j_max;
  mo.ladder.tol = cfg.run.ladder_tol;
  mo.ladder.newton = cfg.run.newton;
  mo.ladder_domination_tol = cfg.run.check_tol;
  mo.v0 = cfg.run.v0;
  const MonotoneRun run = run_monotone_enlarged(cfg.spec, cfg.run.n, cfg.run.M, mo);
  const MonotoneReport mono = check_monotone(run.ladder, cfg.run.check_tol);

  std::ostringstream os;
  os << "j,sup_gap,min_increment\n";
  for (std::size_t j = 0; j < run.ladder.sup_gaps.size(); ++j)
    os << j + 1 << ',' << format_double(run.ladder.sup_gaps[j]) << ','
       << format_double(run.ladder.min_increments[j]) << '\n';
  ctx.out.write("ladder.csv", os.str());
  ctx.out.write("auxiliary_snapshots.csv", snapshot_csv(run.auxiliary));
  ctx.out.write("limit_snapshots.csv", snapshot_csv(run.ladder.limit()));
  ctx.out.write("ledger.csv", ledger_csv(ledger(run.ladder.limit(), cfg.spec->r, cfg.run.etas, cfg.run.k_values)));

  const bool domination_asserted = cfg.spec->lambda <= 1.0;
  ctx.meta["checks"]["monotone"] = mono.passed;
  ctx.meta["enlargements"] = run.enlargements;
  ctx.meta["floor_defect"] = run.floor_defect;
  const bool floor_ok = run.floor_defect <= mo.floor_tol;
  ctx.meta["checks"]["forcing_floor"] = floor_ok;
  ctx.log << "forcing floor: " << (floor_ok ? "pass" : "FAIL") << " (defect " << format_double(run.floor_defect)
          << " after " << run.enlargements << " enlargements)\n";
  ctx.meta["ladder_converged"] = run.ladder.converged;
  if (domination_asserted) ctx.meta["checks"]["domination"] = run.domination.passed;
  ctx.log << "monotone: " << (mono.passed ? "pass" : "FAIL") << " (worst decrease " << format_double(mono.worst_decrease)
          << "), domination: " << (run.domination.passed ? "pass" : "FAIL") << " (worst excess "
          << format_double(run.domination.worst_excess) << ")"
          << (domination_asserted ? "" : " [not asserted: lambda > 1]") << ", iterations "
          << run.ladder.sup_gaps.size() << (run.ladder.converged ? " (converged)" : " (j_max reached)") << '\n';
  return floor_ok && mono.passed && (!domination_asserted || run.domination.passed) ? exit_ok : exit_check_failed;
}

inline int verb_barrier(const Config& cfg, HarnessContext& ctx) {
  RotheOptions ro;
  ro.newton = cfg.run.newton;
  const Trajectory traj = run_rothe(cfg.spec, cfg.run.n, cfg.run.M, ro);
  const BarrierReport b = barrier_check(traj, cfg.run.barrier_tol, cfg.run.newton);
  ctx.out.write("barrier_snapshots.csv", snapshot_csv(b.barrier));
  ctx.meta["checks"]["barrier"] = b.passed;
  ctx.meta["barrier_margin"] = b.margin;
  ctx.log << "barrier: " << (b.passed ? "pass" : "FAIL") << " (margin " << format_double(b.margin)
          << ", forcing bound " << format_double(b.forcing_bound) << ")";
  if (!b.passed) ctx.log << " at step " << *b.violation_step << ", node " << *b.violation_node;
  ctx.log << '\n';
  return b.passed ? exit_ok : exit_check_failed;
}

inline int verb_compare(const Config& u_cfg, const Config& v_cfg, HarnessContext& ctx) {
  RotheOptions ro;
  ro.newton = u_cfg.run.newton;
  const Trajectory u = run_rothe(u_cfg.spec, u_cfg.run.n, u_cfg.run.M, ro);
  const Trajectory v = run_rothe(v_cfg.spec, v_cfg.run.n, v_cfg.run.M, ro);
  const ComparisonReport c = check_comparison(u, v, u_cfg.run.check_tol);
  ctx.out.write("u_snapshots.csv", snapshot_csv(u));
  ctx.out.write("v_snapshots.csv", snapshot_csv(v));
  ctx.meta["checks"]["comparison"] = c.passed;
  ctx.log << "comparison: " << (c.passed ? "pass" : "FAIL") << " (max u - v = " << format_double(c.worst_excess)
          << " at step " << c.step << ", node " << c.node << ")\n";
  return c.passed ? exit_ok : exit_check_failed;
}

struct HarnessRequest {
  std::string verb;
  std::string config_path;
  std::string second_config_path;  // v for the compare verb
  std::string out_dir = "out";
  HarnessOverrides overrides;
};

/**
 * Loads, validates and dispatches one CLI invocation. Exit codes: 0 all checks
 * passed, 1 a check failed, 2 configuration or hypothesis validation failed
 * (report printed), 3 a step solve failed (last converged time printed).
 */
inline int run_experiment(const HarnessRequest& req, std::ostream& log, std::ostream& err) {
  static const std::vector<std::string> verbs{"validate", "run", "sweep", "monotone", "barrier", "compare"};
  if (std::find(verbs.begin(), verbs.end(), req.verb) == verbs.end()) {
    err << "unknown verb '" << req.verb << "'\n";
    return exit_validation_failed;
  }
  Config cfg;
  std::optional<Config> v_cfg;
  try {
    cfg = load_config(req.config_path);
    apply_overrides(cfg.run, req.overrides);
    if (req.verb == "compare") {
      if (req.second_config_path.empty()) throw ConfigError("compare needs a second configuration (--against)");
      v_cfg = load_config(req.second_config_path);
      apply_overrides(v_cfg->run, req.overrides);
    }
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return exit_validation_failed;
  }

  const HypothesisReport report = validate_hypotheses(*cfg.spec);
  log << report.to_string();
  if (!report.passed()) {
    err << "hypothesis check failed: " << report.first_failure()->name << '\n';
    return exit_validation_failed;
  }
  if (v_cfg) {
    const HypothesisReport vr = validate_hypotheses(*v_cfg->spec);
    log << vr.to_string();
    if (!vr.passed()) {
      err << "hypothesis check failed for the second configuration: " << vr.first_failure()->name << '\n';
      return exit_validation_failed;
    }
  }
  if (req.verb == "validate") return exit_ok;

  std::ifstream raw(req.config_path, std::ios::binary);
  std::ostringstream raw_text;
  raw_text << raw.rdbuf();

  json meta;
  meta["verb"] = req.verb;
  meta["config"] = std::filesystem::path(req.config_path).filename().string();
  meta["config_sha256"] = sha256_hex(raw_text.str());
  meta["newton_tol"] = cfg.run.newton.tol;
  meta["newton_max_iter"] = cfg.run.newton.max_iter;
  meta["random_seeds"] = json::array();
  meta["checks"] = json::object();

  int code = exit_ok;
  try {
    OutputCollector out(req.out_dir);
    HarnessContext ctx{out, log, meta};
    try {
      if (req.verb == "run") code = verb_run(cfg, ctx);
      if (req.verb == "sweep") code = verb_sweep(cfg, ctx);
      if (req.verb == "monotone") code = verb_monotone(cfg, ctx);
      if (req.verb == "barrier") code = verb_barrier(cfg, ctx);
      if (req.verb == "compare") code = verb_compare(cfg, *v_cfg, ctx);
    } catch (const RotheFailure& e) {
      err << e.what() << '\n'
          << "last converged time: " << format_double(e.last_safe_time()) << " (step " << e.failed_step() - 1
          << " of " << cfg.run.M << ")\n";
      out.write("partial_snapshots.csv", snapshot_csv(e.partial()));
      meta["failed_step"] = e.failed_step();
      meta["last_safe_time"] = e.last_safe_time();
      code = exit_solver_failed;
    } catch (const NonConvergenceError& e) {
      err << e.what() << '\n';
      code = exit_solver_failed;
    }
    meta["exit_code"] = code;
    out.write_manifest(meta);
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return exit_validation_failed;
  }
  return code;
}

}  // namespace pxlap
