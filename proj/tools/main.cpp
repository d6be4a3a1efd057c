// Experiment runner for the self-triggered time-varying optimizer.
//
// Subcommands: run, compare, sweep, validate, estimate-bounds.
// Exit codes: 0 ok, 1 validation failed, 2 config error, 3 solver error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "trigopt/cli.hpp"

namespace {

void add_solver_flags(CLI::App* app, trigopt::SolverFlags& flags,
                      std::string& x0_text) {
  app->add_option("--strategy", flags.strategy,
                  "triggering strategy: second|third");
  app->add_option("--alpha", flags.alpha, "descent gain (> 0)");
  app->add_option("--epsilon", flags.epsilon, "target Lyapunov level (> 0)");
  app->add_option("--t0", flags.t0, "start time");
  app->add_option("--tf", flags.tf, "end time");
  app->add_option("--x0", x0_text, "initial state, comma separated");
  app->add_option("--root-tol", flags.root_tol, "trigger root tolerance");
  app->add_option("--max-samples", flags.max_samples, "sample budget");
  app->add_option("--config", flags.config_file,
                  "config file (key = value; flags take precedence)");
}

void finish_flags(trigopt::SolverFlags& flags, const std::string& x0_text) {
  if (!x0_text.empty()) flags.x0 = trigopt::parse_double_list(x0_text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-triggered time-varying convex optimization experiments"};
  app.require_subcommand(1);

  trigopt::RunCmd run_cmd;
  std::string run_x0;
  auto* run = app.add_subcommand("run", "single self-triggered run");
  run->add_option("problem", run_cmd.problem_id, "problem id")->required();
  add_solver_flags(run, run_cmd.flags, run_x0);
  run->add_option("--traj", run_cmd.traj_path, "trajectory output file");
  run->add_option("--summary", run_cmd.summary_path, "summary output file");

  trigopt::CompareCmd compare_cmd;
  std::string compare_x0;
  auto* compare = app.add_subcommand(
      "compare", "self-triggered run vs periodic baselines");
  compare->add_option("problem", compare_cmd.problem_id, "problem id")
      ->required();
  add_solver_flags(compare, compare_cmd.flags, compare_x0);
  compare
      ->add_option("--periods", compare_cmd.periods,
                   "periodic sampling periods h")
      ->required()
      ->delimiter(',');
  compare->add_option("--out", compare_cmd.out_path, "table output file");
  compare->add_option("--error-grid", compare_cmd.error_grid,
                      "points on the shared tracking-error grid");

  trigopt::SweepCmd sweep_cmd;
  std::string sweep_x0;
  auto* sweep = app.add_subcommand("sweep", "parameter sweep");
  sweep->add_option("problem", sweep_cmd.problem_id, "problem id")->required();
  sweep->add_option("--param", sweep_cmd.parameter, "alpha|epsilon")
      ->required();
  sweep->add_option("--values", sweep_cmd.values, "swept values")
      ->required()
      ->delimiter(',');
  add_solver_flags(sweep, sweep_cmd.flags, sweep_x0);
  sweep->add_option("--out", sweep_cmd.out_path, "table output file");

  trigopt::ValidateCmd validate_cmd;
  std::string validate_x0;
  auto* validate =
      app.add_subcommand("validate", "dense-grid soundness checks");
  validate->add_option("problem", validate_cmd.problem_id, "problem id")
      ->required();
  add_solver_flags(validate, validate_cmd.flags, validate_x0);
  validate->add_option("--grid", validate_cmd.grid, "grid points per segment");
  validate->add_option("--corrupt-bounds", validate_cmd.corrupt_bounds,
                       "test hook: scale all bound constants");

  trigopt::EstimateBoundsCmd est_cmd;
  auto* est = app.add_subcommand("estimate-bounds",
                                 "grid maxima of the derivative norms");
  est->add_option("problem", est_cmd.problem_id, "problem id")->required();
  est->add_option("--grid", est_cmd.grid, "grid points per axis");
  est->add_option("--t-lo", est_cmd.t_lo, "time interval start");
  est->add_option("--t-hi", est_cmd.t_hi, "time interval end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      finish_flags(run_cmd.flags, run_x0);
      return trigopt::cmd_run(run_cmd);
    }
    if (*compare) {
      finish_flags(compare_cmd.flags, compare_x0);
      return trigopt::cmd_compare(compare_cmd);
    }
    if (*sweep) {
      finish_flags(sweep_cmd.flags, sweep_x0);
      return trigopt::cmd_sweep(sweep_cmd);
    }
    if (*validate) {
      finish_flags(validate_cmd.flags, validate_x0);
      return trigopt::cmd_validate(validate_cmd);
    }
    if (*est) {
      return trigopt::cmd_estimate_bounds(est_cmd);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
