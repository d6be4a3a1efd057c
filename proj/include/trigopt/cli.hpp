#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trigopt/parallel.hpp"
#include "trigopt/problems.hpp"
#include "trigopt/solver.hpp"
#include "trigopt/trajectory_io.hpp"
#include "trigopt/validation.hpp"

namespace trigopt {

inline std::string_view strategy_name(Strategy s) {
  return s == Strategy::second_order ? "second" : "third";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "second") return Strategy::second_order;
  if (s == "third") return Strategy::third_order;
  throw std::invalid_argument("strategy must be 'second' or 'third'");
}

/// Per-run result row; statistics are recomputable bit-exactly from the
/// emitted trajectory file together with tf and the clamped flag.
struct RunSummary {
  std::string problem;
  Strategy strategy = Strategy::third_order;
  double alpha = 0.0;
  double epsilon = 0.0;
  double t0 = 0.0;
  double tf = 0.0;
  int dimension = 0;
  std::size_t samples = 0;  // trigger-chosen step count
  double mean_step = 0.0;
  double std_step = 0.0;
  std::int64_t phase_switch_index = -1;  // first k with V(t_k) <= epsilon
  double phase_switch_time = 0.0;
  double final_tracking_error = 0.0;
  bool final_step_clamped = false;
  double wall_time_s = 0.0;
};

inline RunSummary summarize(const Trajectory& traj, const ProblemSpec& prob,
                            double wall_s = 0.0) {
  RunSummary s;
  s.problem = prob.name;
  s.strategy = traj.config.strategy;
  s.alpha = traj.config.alpha;
  s.epsilon = traj.config.epsilon;
  s.t0 = traj.config.t0;
  s.tf = traj.config.tf;
  s.dimension = traj.dimension;
  const StepStats stats = trigger_step_stats(traj);
  s.samples = stats.count;
  s.mean_step = stats.mean;
  s.std_step = stats.stddev;
  s.phase_switch_index = -1;
  for (const auto& r : traj.records) {
    if (r.v <= traj.config.epsilon) {
      s.phase_switch_index = static_cast<std::int64_t>(r.index);
      s.phase_switch_time = r.t;
      break;
    }
  }
  const Vector xf = traj.final_x();
  const Vector xs = prob.reference_optimum
                        ? prob.reference_optimum(traj.final_time())
                        : reference_optimum(prob.oracle, traj.final_time(), xf);
  s.final_tracking_error = (xf - xs).norm();
  s.final_step_clamped = traj.final_step_clamped;
  s.wall_time_s = wall_s;
  return s;
}

inline std::string summary_text(const RunSummary& s) {
  std::ostringstream out;
  out << "problem = " << s.problem << '\n'
      << "strategy = " << strategy_name(s.strategy) << '\n'
      << "alpha = " << format_double(s.alpha) << '\n'
      << "epsilon = " << format_double(s.epsilon) << '\n'
      << "t0 = " << format_double(s.t0) << '\n'
      << "tf = " << format_double(s.tf) << '\n'
      << "dimension = " << s.dimension << '\n'
      << "samples = " << s.samples << '\n'
      << "mean_step = " << format_double(s.mean_step) << '\n'
      << "std_step = " << format_double(s.std_step) << '\n'
      << "phase_switch_index = " << s.phase_switch_index << '\n'
      << "phase_switch_time = " << format_double(s.phase_switch_time) << '\n'
      << "final_tracking_error = " << format_double(s.final_tracking_error)
      << '\n'
      << "final_step_clamped = " << (s.final_step_clamped ? 1 : 0) << '\n'
      << "wall_time_s = " << format_double(s.wall_time_s) << '\n';
  return out.str();
}

/// Parses a summary back into key -> raw value text.
inline std::map<std::string, std::string> parse_key_values(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("malformed line: '" + line + "'");
    }
    auto trim = [](const std::string& v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string()
                                    : v.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// ---------------------------------------------------------------------------
// Configuration assembly: defaults < config file < flags
// ---------------------------------------------------------------------------

/// Command-line overrides; unset fields fall back to the config file and then
/// to the built-in defaults.
struct SolverFlags {
  std::optional<std::string> strategy;
  std::optional<double> alpha;
  std::optional<double> epsilon;
  std::optional<double> t0;
  std::optional<double> tf;
  std::optional<std::vector<double>> x0;
  std::optional<double> root_tol;
  std::optional<std::uint64_t> max_samples;
  std::string config_file;
};

inline std::vector<double> parse_double_list(std::string_view s) {
  std::vector<double> out;
  for (const auto part : detail::split(s, ',')) out.push_back(parse_double(part));
  return out;
}

inline SolverConfig build_config(const ProblemSpec& prob,
                                 const SolverFlags& flags) {
  SolverConfig cfg;
  cfg.strategy = Strategy::third_order;
  cfg.alpha = 5.0;
  cfg.epsilon = 0.01;
  cfg.t0 = 0.0;
  cfg.tf = 7.0;
  cfg.x0 = prob.default_x0;
  cfg.domain_box = prob.domain_box;

  if (!flags.config_file.empty()) {
    for (const auto& [key, value] : parse_key_values(flags.config_file)) {
      if (key == "strategy") {
        cfg.strategy = parse_strategy(value);
      } else if (key == "alpha") {
        cfg.alpha = parse_double(value);
      } else if (key == "epsilon") {
        cfg.epsilon = parse_double(value);
      } else if (key == "t0") {
        cfg.t0 = parse_double(value);
      } else if (key == "tf") {
        cfg.tf = parse_double(value);
      } else if (key == "x0") {
        const auto vals = parse_double_list(value);
        cfg.x0 = Eigen::Map<const Vector>(vals.data(),
                                          static_cast<Eigen::Index>(vals.size()));
      } else if (key == "root_tol") {
        cfg.root_tol = parse_double(value);
      } else if (key == "max_samples") {
        cfg.max_samples = static_cast<std::size_t>(parse_double(value));
      } else {
        throw std::invalid_argument("unknown config key: '" + key + "'");
      }
    }
  }

  if (flags.strategy) cfg.strategy = parse_strategy(*flags.strategy);
  if (flags.alpha) cfg.alpha = *flags.alpha;
  if (flags.epsilon) cfg.epsilon = *flags.epsilon;
  if (flags.t0) cfg.t0 = *flags.t0;
  if (flags.tf) cfg.tf = *flags.tf;
  if (flags.x0) {
    cfg.x0 = Eigen::Map<const Vector>(flags.x0->data(),
                                      static_cast<Eigen::Index>(flags.x0->size()));
  }
  if (flags.root_tol) cfg.root_tol = *flags.root_tol;
  if (flags.max_samples) cfg.max_samples = *flags.max_samples;

  cfg.validate();
  if (cfg.x0.size() != prob.oracle.dimension) {
    throw std::invalid_argument("x0 dimension does not match the problem");
  }
  return cfg;
}

inline ProblemSpec resolve_problem(const std::string& id) {
  auto prob = make_problem(id);
  if (!prob) {
    throw std::invalid_argument("unknown problem id: '" + id + "'");
  }
  return std::move(*prob);
}

namespace detail {

/// Maps failures onto the CLI exit-code contract: 2 for configuration
/// errors, 3 for solver errors.
template <typename Fn>
int guarded(Fn&& fn, std::ostream& diag) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    diag << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    diag << "solver error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return 3;
  }
}

inline double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

/// Max over a shared dense time grid of ||x(t) - x*(t)||.
inline double max_tracking_error(const Trajectory& traj,
                                 const std::vector<double>& grid,
                                 const std::vector<Vector>& x_star) {
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    worst = std::max(worst, (traj.interpolate(grid[i]) - x_star[i]).norm());
  }
  return worst;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct RunCmd {
  std::string problem_id;
  SolverFlags flags;
  std::string traj_path = "trajectory.csv";
  std::string summary_path = "summary.txt";
};

inline int cmd_run(const RunCmd& cmd, std::ostream& diag = std::cerr) {
  return detail::guarded(
      [&] {
        const ProblemSpec prob = resolve_problem(cmd.problem_id);
        const SolverConfig cfg = build_config(prob, cmd.flags);
        const auto start = std::chrono::steady_clock::now();
        const Trajectory traj = run_self_triggered(prob.oracle, prob.bounds, cfg);
        const RunSummary summary =
            summarize(traj, prob, detail::elapsed_s(start));
        write_trajectory_csv(cmd.traj_path, traj);
        write_text_atomic(cmd.summary_path, summary_text(summary));
        return 0;
      },
      diag);
}

struct CompareCmd {
  std::string problem_id;
  SolverFlags flags;
  std::vector<double> periods;
  std::string out_path = "compare.csv";
  int error_grid = 2001;
};

/// Self-triggered run against periodic baselines: per method the update
/// count, its natural log, and the max tracking error on a shared dense grid.
inline int cmd_compare(const CompareCmd& cmd, std::ostream& diag = std::cerr) {
  return detail::guarded(
      [&] {
        if (cmd.periods.empty()) {
          throw std::invalid_argument("compare: need at least one period");
        }
        for (const double h : cmd.periods) {
          if (!(h > 0.0)) {
            throw std::invalid_argument("compare: periods must be > 0");
          }
        }
        const ProblemSpec prob = resolve_problem(cmd.problem_id);
        const SolverConfig cfg = build_config(prob, cmd.flags);

        std::vector<double> grid(static_cast<std::size_t>(cmd.error_grid));
        for (std::size_t i = 0; i < grid.size(); ++i) {
          grid[i] = cfg.t0 + (cfg.tf - cfg.t0) * static_cast<double>(i) /
                                 static_cast<double>(grid.size() - 1);
        }
        std::vector<Vector> x_star(grid.size());
        parallel_for(grid.size(), [&](std::size_t i) {
          x_star[i] = prob.reference_optimum
                          ? prob.reference_optimum(grid[i])
                          : reference_optimum(prob.oracle, grid[i], cfg.x0);
        });

        const std::size_t jobs = 1 + cmd.periods.size();
        std::vector<Trajectory> trajs(jobs);
        parallel_for(jobs, [&](std::size_t i) {
          trajs[i] = i == 0 ? run_self_triggered(prob.oracle, prob.bounds, cfg)
                            : run_periodic(prob.oracle, cfg, cmd.periods[i - 1]);
        });

        std::ostringstream out;
        out << "method,h,samples,ln_samples,max_tracking_error\n";
        for (std::size_t i = 0; i < jobs; ++i) {
          const auto samples = trajs[i].records.size();
          out << (i == 0 ? "self_triggered" : "periodic") << ','
              << (i == 0 ? std::string() : format_double(cmd.periods[i - 1]))
              << ',' << samples << ','
              << format_double(std::log(static_cast<double>(samples))) << ','
              << format_double(
                     detail::max_tracking_error(trajs[i], grid, x_star))
              << '\n';
        }
        write_text_atomic(cmd.out_path, out.str());
        return 0;
      },
      diag);
}

struct SweepCmd {
  std::string problem_id;
  std::string parameter;  // "alpha" or "epsilon"
  std::vector<double> values;
  SolverFlags flags;
  std::string out_path = "sweep.csv";
};

/// One summary row per swept value; also reports the hold-phase max tracking
/// error (the quantity the epsilon level controls).
inline int cmd_sweep(const SweepCmd& cmd, std::ostream& diag = std::cerr) {
  return detail::guarded(
      [&] {
        if (cmd.parameter != "alpha" && cmd.parameter != "epsilon") {
          throw std::invalid_argument("sweep parameter must be alpha|epsilon");
        }
        if (cmd.values.empty()) {
          throw std::invalid_argument("sweep: need at least one value");
        }
        for (const double v : cmd.values) {
          if (!(v > 0.0)) {
            throw std::invalid_argument("sweep values must be > 0");
          }
        }
        const ProblemSpec prob = resolve_problem(cmd.problem_id);
        const SolverConfig base = build_config(prob, cmd.flags);

        struct Row {
          RunSummary summary;
          double hold_max_error = 0.0;
        };
        std::vector<Row> rows(cmd.values.size());
        parallel_for(cmd.values.size(), [&](std::size_t i) {
          SolverConfig cfg = base;
          if (cmd.parameter == "alpha") {
            cfg.alpha = cmd.values[i];
          } else {
            cfg.epsilon = cmd.values[i];
          }
          cfg.validate();
          const auto start = std::chrono::steady_clock::now();
          const Trajectory traj =
              run_self_triggered(prob.oracle, prob.bounds, cfg);
          rows[i].summary = summarize(traj, prob, detail::elapsed_s(start));

          double worst = 0.0;
          for (const auto& r : traj.records) {
            if (r.phase != Phase::hold) continue;
            for (int j = 0; j < 50; ++j) {
              const double tau = r.tau * static_cast<double>(j) / 49.0;
              const double t = r.t + tau;
              const Vector x = r.x + r.xdot * tau;
              const Vector xs =
                  prob.reference_optimum
                      ? prob.reference_optimum(t)
                      : reference_optimum(prob.oracle, t, x);
              worst = std::max(worst, (x - xs).norm());
            }
          }
          rows[i].hold_max_error = worst;
        });

        std::ostringstream out;
        out << "parameter,value,samples,mean_step,std_step,"
               "phase_switch_index,phase_switch_time,final_tracking_error,"
               "hold_max_tracking_error\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const auto& s = rows[i].summary;
          out << cmd.parameter << ',' << format_double(cmd.values[i]) << ','
              << s.samples << ',' << format_double(s.mean_step) << ','
              << format_double(s.std_step) << ',' << s.phase_switch_index
              << ',' << format_double(s.phase_switch_time) << ','
              << format_double(s.final_tracking_error) << ','
              << format_double(rows[i].hold_max_error) << '\n';
        }
        write_text_atomic(cmd.out_path, out.str());
        return 0;
      },
      diag);
}

struct ValidateCmd {
  std::string problem_id;
  SolverFlags flags;
  int grid = 200;
  /// Test hook: scales all six bound constants before running and checking.
  double corrupt_bounds = 1.0;
};

inline int cmd_validate(const ValidateCmd& cmd, std::ostream& out = std::cout,
                        std::ostream& diag = std::cerr) {
  return detail::guarded(
      [&]() -> int {
        if (cmd.grid < 1) {
          throw std::invalid_argument("validate: grid must be >= 1");
        }
        if (!(cmd.corrupt_bounds > 0.0)) {
          throw std::invalid_argument("validate: corrupt factor must be > 0");
        }
        const ProblemSpec prob = resolve_problem(cmd.problem_id);
        const SolverConfig cfg = build_config(prob, cmd.flags);
        DerivativeBounds bounds = prob.bounds;
        bounds.m *= cmd.corrupt_bounds;
        bounds.c_xx *= cmd.corrupt_bounds;
        bounds.c_xt *= cmd.corrupt_bounds;
        bounds.c_xxx *= cmd.corrupt_bounds;
        bounds.c_xxt *= cmd.corrupt_bounds;
        bounds.c_xtt *= cmd.corrupt_bounds;

        const Trajectory traj = run_self_triggered(prob.oracle, bounds, cfg);

        std::vector<ValidationReport> reports;
        reports.push_back(
            check_trigger_soundness(traj, prob.oracle, bounds, cmd.grid));
        reports.push_back(
            check_gradient_bound_chain(traj, prob.oracle, bounds, cmd.grid));
        reports.push_back(
            check_lyapunov_profile(traj, prob.oracle, cmd.grid));
        reports.push_back(check_oracle_consistency(
            prob.oracle, prob.domain_box, cfg.t0, cfg.tf, 100));

        bool all_pass = true;
        for (const auto& rep : reports) {
          all_pass = all_pass && rep.pass;
          out << rep.check << ": " << (rep.pass ? "PASS" : "FAIL")
              << " worst_violation=" << format_double(rep.worst_violation)
              << " at (k=" << rep.worst_segment
              << ", t=" << format_double(rep.worst_t) << ")\n";
        }
        return all_pass ? 0 : 1;
      },
      diag);
}

struct EstimateBoundsCmd {
  std::string problem_id;
  int grid = 81;
  std::optional<double> t_lo;
  std::optional<double> t_hi;
};

inline int cmd_estimate_bounds(const EstimateBoundsCmd& cmd,
                               std::ostream& out = std::cout,
                               std::ostream& diag = std::cerr) {
  return detail::guarded(
      [&] {
        const ProblemSpec prob = resolve_problem(cmd.problem_id);
        const double t_lo = cmd.t_lo.value_or(0.0);
        const double t_hi = cmd.t_hi.value_or(7.0);
        const DerivativeBounds est = estimate_bounds(
            prob.oracle, prob.domain_box, t_lo, t_hi, cmd.grid);
        const auto line = [&](const char* name, double estimated,
                              double declared) {
          out << name << " = " << format_double(estimated)
              << " (declared " << format_double(declared) << ")\n";
        };
        line("m", est.m, prob.bounds.m);
        line("c_xx", est.c_xx, prob.bounds.c_xx);
        line("c_xt", est.c_xt, prob.bounds.c_xt);
        line("c_xxx", est.c_xxx, prob.bounds.c_xxx);
        line("c_xxt", est.c_xxt, prob.bounds.c_xxt);
        line("c_xtt", est.c_xtt, prob.bounds.c_xtt);
        return 0;
      },
      diag);
}

}  // namespace trigopt
