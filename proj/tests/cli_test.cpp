#include "trigopt/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace trigopt {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("trigopt_") + info->test_suite_name() + "_" +
            info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  }

  fs::path dir_;
};

RunCmd paper_run_cmd() {
  RunCmd cmd;
  cmd.problem_id = "paper1d";
  cmd.flags.strategy = "third";
  cmd.flags.alpha = 5.0;
  cmd.flags.epsilon = 0.01;
  cmd.flags.t0 = 0.0;
  cmd.flags.tf = 7.0;
  return cmd;
}

TEST_F(CliTest, RunWritesTrajectoryAndSummary) {
  RunCmd cmd = paper_run_cmd();
  cmd.traj_path = path("traj.csv");
  cmd.summary_path = path("summary.txt");
  std::ostringstream diag;
  ASSERT_EQ(cmd_run(cmd, diag), 0) << diag.str();
  ASSERT_TRUE(fs::exists(cmd.traj_path));
  ASSERT_TRUE(fs::exists(cmd.summary_path));

  const auto kv = parse_key_values(cmd.summary_path);
  EXPECT_EQ(kv.at("problem"), "paper1d");
  EXPECT_EQ(kv.at("strategy"), "third");
  const auto samples = static_cast<std::size_t>(parse_double(kv.at("samples")));
  EXPECT_GE(samples, 40u);
  EXPECT_LE(samples, 70u);
  EXPECT_EQ(kv.at("final_step_clamped"), "1");
}

TEST_F(CliTest, SummaryStatisticsRecomputableFromTrajectoryFile) {
  RunCmd cmd = paper_run_cmd();
  cmd.traj_path = path("traj.csv");
  cmd.summary_path = path("summary.txt");
  std::ostringstream diag;
  ASSERT_EQ(cmd_run(cmd, diag), 0) << diag.str();

  const auto kv = parse_key_values(cmd.summary_path);
  int dim = 0;
  const auto records = read_trajectory_csv(cmd.traj_path, dim);
  EXPECT_EQ(dim, 1);
  const StepStats stats =
      recompute_step_stats(records, kv.at("final_step_clamped") == "1");

  // bit-exact round trip: shortest decimal rendering preserves the doubles
  EXPECT_EQ(format_double(stats.mean), kv.at("mean_step"));
  EXPECT_EQ(format_double(stats.stddev), kv.at("std_step"));
  EXPECT_EQ(std::to_string(stats.count), kv.at("samples"));

  std::size_t switch_index = 0;
  bool found = false;
  const double epsilon = parse_double(kv.at("epsilon"));
  for (const auto& r : records) {
    if (r.v <= epsilon) {
      switch_index = r.index;
      found = true;
      break;
    }
  }
  ASSERT_TRUE(found);
  EXPECT_EQ(std::to_string(switch_index), kv.at("phase_switch_index"));
}

TEST_F(CliTest, MissingProblemExitsWithConfigErrorAndWritesNothing) {
  RunCmd cmd;
  cmd.problem_id = "not_a_problem";
  cmd.traj_path = path("traj.csv");
  cmd.summary_path = path("summary.txt");
  std::ostringstream diag;
  EXPECT_EQ(cmd_run(cmd, diag), 2);
  EXPECT_FALSE(fs::exists(cmd.traj_path));
  EXPECT_FALSE(fs::exists(cmd.summary_path));
  EXPECT_NE(diag.str().find("unknown problem"), std::string::npos);
}

TEST_F(CliTest, InvalidFlagValueExitsWithConfigError) {
  RunCmd cmd = paper_run_cmd();
  cmd.flags.epsilon = -1.0;
  cmd.traj_path = path("traj.csv");
  cmd.summary_path = path("summary.txt");
  std::ostringstream diag;
  EXPECT_EQ(cmd_run(cmd, diag), 2);
  EXPECT_FALSE(fs::exists(cmd.traj_path));
}

TEST_F(CliTest, SolverFailureExitsWithSolverError) {
  RunCmd cmd = paper_run_cmd();
  cmd.flags.max_samples = 3;
  cmd.traj_path = path("traj.csv");
  cmd.summary_path = path("summary.txt");
  std::ostringstream diag;
  EXPECT_EQ(cmd_run(cmd, diag), 3);
  EXPECT_FALSE(fs::exists(cmd.traj_path));
}

TEST_F(CliTest, IdenticalInvocationsProduceByteIdenticalTrajectories) {
  RunCmd a = paper_run_cmd();
  a.traj_path = path("a.csv");
  a.summary_path = path("a.txt");
  RunCmd b = paper_run_cmd();
  b.traj_path = path("b.csv");
  b.summary_path = path("b.txt");
  std::ostringstream diag;
  ASSERT_EQ(cmd_run(a, diag), 0);
  ASSERT_EQ(cmd_run(b, diag), 0);
  EXPECT_EQ(slurp(a.traj_path), slurp(b.traj_path));
}

TEST_F(CliTest, QuadRunRespectsTrackingBound) {
  RunCmd cmd;
  cmd.problem_id = "quad:1,0.5";
  cmd.flags.alpha = 5.0;
  cmd.flags.epsilon = 1e-4;
  cmd.traj_path = path("traj.csv");
  cmd.summary_path = path("summary.txt");
  std::ostringstream diag;
  ASSERT_EQ(cmd_run(cmd, diag), 0) << diag.str();
  const auto kv = parse_key_values(cmd.summary_path);
  // final tracking error within 2 sqrt(2 eps) / m with m = 1
  EXPECT_LE(parse_double(kv.at("final_tracking_error")),
            2.0 * std::sqrt(2.0 * 1e-4));
}

TEST_F(CliTest, ConfigFileProvidesDefaultsAndFlagsOverride) {
  const std::string cfg_path = path("run.cfg");
  {
    std::ofstream out(cfg_path);
    out << "# sample config\n"
        << "alpha = 1\n"
        << "epsilon = 0.02\n"
        << "strategy = second\n";
  }
  RunCmd cmd;
  cmd.problem_id = "paper1d";
  cmd.flags.config_file = cfg_path;
  cmd.flags.alpha = 5.0;  // flag beats file
  cmd.traj_path = path("traj.csv");
  cmd.summary_path = path("summary.txt");
  std::ostringstream diag;
  ASSERT_EQ(cmd_run(cmd, diag), 0) << diag.str();
  const auto kv = parse_key_values(cmd.summary_path);
  EXPECT_EQ(kv.at("alpha"), "5");
  EXPECT_EQ(kv.at("epsilon"), "0.02");
  EXPECT_EQ(kv.at("strategy"), "second");
}

TEST_F(CliTest, ConfigFileUnknownKeyIsConfigError) {
  const std::string cfg_path = path("run.cfg");
  {
    std::ofstream out(cfg_path);
    out << "alfa = 1\n";
  }
  RunCmd cmd;
  cmd.problem_id = "paper1d";
  cmd.flags.config_file = cfg_path;
  std::ostringstream diag;
  EXPECT_EQ(cmd_run(cmd, diag), 2);
}

TEST_F(CliTest, SingletonSweepMatchesRunBitExactly) {
  RunCmd run = paper_run_cmd();
  run.traj_path = path("traj.csv");
  run.summary_path = path("summary.txt");
  std::ostringstream diag;
  ASSERT_EQ(cmd_run(run, diag), 0);
  const auto kv = parse_key_values(run.summary_path);

  SweepCmd sweep;
  sweep.problem_id = "paper1d";
  sweep.parameter = "epsilon";
  sweep.values = {0.01};
  sweep.flags = run.flags;
  sweep.out_path = path("sweep.csv");
  ASSERT_EQ(cmd_sweep(sweep, diag), 0) << diag.str();

  std::ifstream in(sweep.out_path);
  std::string header, row;
  ASSERT_TRUE(std::getline(in, header));
  ASSERT_TRUE(std::getline(in, row));
  const auto cols = detail::split(row, ',');
  // parameter,value,samples,mean_step,std_step,...
  EXPECT_EQ(cols[0], "epsilon");
  EXPECT_EQ(std::string(cols[2]), kv.at("samples"));
  EXPECT_EQ(std::string(cols[3]), kv.at("mean_step"));
  EXPECT_EQ(std::string(cols[4]), kv.at("std_step"));
}

TEST_F(CliTest, EpsilonSweepSampleCountsNearlyFlat) {
  SweepCmd sweep;
  sweep.problem_id = "paper1d";
  sweep.parameter = "epsilon";
  sweep.values = {0.0075, 0.01, 0.0125};
  sweep.flags.alpha = 5.0;
  sweep.flags.strategy = "third";
  sweep.out_path = path("sweep.csv");
  std::ostringstream diag;
  ASSERT_EQ(cmd_sweep(sweep, diag), 0) << diag.str();

  std::ifstream in(sweep.out_path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));  // header
  std::vector<double> samples, hold_err;
  while (std::getline(in, line)) {
    const auto cols = detail::split(line, ',');
    samples.push_back(parse_double(cols[2]));
    hold_err.push_back(parse_double(cols[8]));
  }
  ASSERT_EQ(samples.size(), 3u);
  const double lo = *std::min_element(samples.begin(), samples.end());
  const double hi = *std::max_element(samples.begin(), samples.end());
  const double mean = (samples[0] + samples[1] + samples[2]) / 3.0;
  EXPECT_LE((hi - lo) / mean, 0.15);
  // the epsilon level controls the hold-phase tracking band
  EXPECT_LE(hold_err[0], hold_err[2] + 1e-9);
}

TEST_F(CliTest, AlphaSweepPhaseSwitchTimeStrictlyDecreasing) {
  SweepCmd sweep;
  sweep.problem_id = "paper1d";
  sweep.parameter = "alpha";
  sweep.values = {1.0, 5.0, 20.0};
  sweep.flags.epsilon = 0.01;
  sweep.out_path = path("sweep.csv");
  std::ostringstream diag;
  ASSERT_EQ(cmd_sweep(sweep, diag), 0) << diag.str();

  std::ifstream in(sweep.out_path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  std::vector<double> switch_times;
  while (std::getline(in, line)) {
    const auto cols = detail::split(line, ',');
    switch_times.push_back(parse_double(cols[6]));
  }
  ASSERT_EQ(switch_times.size(), 3u);
  EXPECT_GT(switch_times[0], switch_times[1]);
  EXPECT_GT(switch_times[1], switch_times[2]);
}

TEST_F(CliTest, CompareTableReportsCountsAndErrors) {
  CompareCmd cmd;
  cmd.problem_id = "paper1d";
  cmd.flags.alpha = 5.0;
  cmd.flags.epsilon = 0.01;
  cmd.periods = {0.1, 0.01, 0.3};
  cmd.out_path = path("compare.csv");
  cmd.error_grid = 701;
  std::ostringstream diag;
  ASSERT_EQ(cmd_compare(cmd, diag), 0) << diag.str();

  std::ifstream in(cmd.out_path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "method,h,samples,ln_samples,max_tracking_error");
  struct Row {
    std::string method;
    double h, samples, ln_samples, err;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    const auto cols = detail::split(line, ',');
    rows.push_back({std::string(cols[0]),
                    cols[1].empty() ? 0.0 : parse_double(cols[1]),
                    parse_double(cols[2]), parse_double(cols[3]),
                    parse_double(cols[4])});
  }
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].method, "self_triggered");
  EXPECT_EQ(rows[1].h, 0.1);
  EXPECT_EQ(rows[1].samples, 70.0);
  EXPECT_NEAR(rows[1].ln_samples, std::log(70.0), 1e-12);
  // finer periodic sampling tracks at least as well
  EXPECT_LE(rows[2].err, rows[1].err);
  EXPECT_LE(rows[1].err, rows[3].err);
}

TEST_F(CliTest, ValidatePassesOnDefaults) {
  ValidateCmd cmd;
  cmd.problem_id = "paper1d";
  cmd.flags.alpha = 5.0;
  cmd.flags.epsilon = 0.01;
  cmd.grid = 60;
  std::ostringstream out, diag;
  EXPECT_EQ(cmd_validate(cmd, out, diag), 0) << diag.str();
  const std::string text = out.str();
  for (const char* check : {"trigger_soundness", "gradient_bound_chain",
                            "lyapunov_profile", "oracle_consistency"}) {
    EXPECT_NE(text.find(std::string(check) + ": PASS"), std::string::npos)
        << text;
  }
}

TEST_F(CliTest, ValidateCorruptBoundsHookFails) {
  ValidateCmd cmd;
  cmd.problem_id = "paper1d";
  cmd.flags.alpha = 5.0;
  cmd.flags.epsilon = 0.01;
  cmd.grid = 60;
  cmd.corrupt_bounds = 0.1;
  std::ostringstream out, diag;
  EXPECT_EQ(cmd_validate(cmd, out, diag), 1);
  EXPECT_NE(out.str().find("trigger_soundness: FAIL"), std::string::npos)
      << out.str();
}

TEST_F(CliTest, ValidateGridOneIsVacuousButValid) {
  ValidateCmd cmd;
  cmd.problem_id = "quad:1,0.5";
  cmd.flags.alpha = 2.0;
  cmd.flags.epsilon = 1e-4;
  cmd.grid = 1;
  std::ostringstream out, diag;
  EXPECT_EQ(cmd_validate(cmd, out, diag), 0) << out.str() << diag.str();
}

TEST_F(CliTest, EstimateBoundsReportsQuadConstants) {
  EstimateBoundsCmd cmd;
  cmd.problem_id = "quad:1,0.5";
  cmd.grid = 61;
  cmd.t_hi = 14.0;
  std::ostringstream out, diag;
  ASSERT_EQ(cmd_estimate_bounds(cmd, out, diag), 0) << diag.str();
  const std::string text = out.str();
  EXPECT_NE(text.find("m = 1"), std::string::npos) << text;
  EXPECT_NE(text.find("c_xx = 1"), std::string::npos);
  EXPECT_NE(text.find("(declared 0.25)"), std::string::npos);  // c_xtt
}

TEST_F(CliTest, WorkersEnvVarBoundsThePool) {
  ::setenv("TRIGOPT_WORKERS", "1", 1);
  EXPECT_EQ(worker_count(8), 1u);

  SweepCmd sweep;
  sweep.problem_id = "quad:1,0.5";
  sweep.parameter = "alpha";
  sweep.values = {1.0, 2.0};
  sweep.flags.epsilon = 1e-4;
  sweep.out_path = path("sweep.csv");
  std::ostringstream diag;
  EXPECT_EQ(cmd_sweep(sweep, diag), 0) << diag.str();

  ::setenv("TRIGOPT_WORKERS", "3", 1);
  EXPECT_EQ(worker_count(8), 3u);
  EXPECT_EQ(worker_count(2), 2u);  // never more workers than jobs
  ::unsetenv("TRIGOPT_WORKERS");
  EXPECT_GE(worker_count(8), 1u);
}

}  // namespace
}  // namespace trigopt
