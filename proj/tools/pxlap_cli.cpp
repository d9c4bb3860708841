#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pxlap/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regularized singular p(x)-Laplacian parabolic solver"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  pxlap::HarnessRequest req;
  double tol = 0.0;
  int max_iter = 0;
  app.add_option("--config", req.config_path, "JSON problem file")->required();
  app.add_option("--out-dir", req.out_dir, "directory for CSV outputs and manifest.json");
  auto* tol_opt = app.add_option("--tol", tol, "Newton residual tolerance");
  auto* iter_opt = app.add_option("--max-iter", max_iter, "Newton iteration cap per step");

  app.add_subcommand("validate", "check the selected hypothesis set and print the report");
  app.add_subcommand("run", "time march, snapshots and estimate ledger");
  app.add_subcommand("sweep", "repeat the run over run.sweep values of n, M or h");
  app.add_subcommand("monotone", "auxiliary supersolution, forcing enlargement and monotone ladder");
  app.add_subcommand("barrier", "time march and constant-source barrier comparison");
  auto* compare = app.add_subcommand("compare", "check u <= v for two ordered configurations");
  compare->add_option("--against", req.second_config_path, "configuration of the upper solution v")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? pxlap::exit_ok : pxlap::exit_validation_failed;
  }
  req.verb = app.get_subcommands().front()->get_name();
  if (*tol_opt) req.overrides.tol = tol;
  if (*iter_opt) req.overrides.max_iter = max_iter;
  return pxlap::run_experiment(req, std::cout, std::cerr);
}
