#include <cstdio>
#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "proxlin/io.hpp"

using namespace proxlin;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PROXLIN_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string tmp(const std::string& name) { return ::testing::TempDir() + "proxlin_cli_" + name; }

}  // namespace

TEST(Cli, SimulateZeroIterationsWritesOneRow) {
  const auto r = run("simulate --d 20 --m 10 --iters 0 --trials 3 --per-trial false");
  ASSERT_EQ(r.code, 0);
  const Table t = from_csv(r.out);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"t", "median_err", "q25_err", "q75_err"}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(as_double(t.rows[0][1]), 0.040196, 1e-6);
  EXPECT_EQ(*t.meta("command"), "simulate");
}

TEST(Cli, SameSeedGivesByteIdenticalFiles) {
  const std::string a = tmp("a.csv"), b = tmp("b.csv");
  const std::string args = "simulate --d 30 --m 8 --iters 5 --trials 4 --seed 9 --lambda 20 --out ";
  ASSERT_EQ(run(args + a).code, 0);
  ASSERT_EQ(run(args + b + " --parallelism 2").code, 0);
  EXPECT_EQ(read_text(a), read_text(b));
  EXPECT_EQ(read_text(tmp("a_trials.csv")), read_text(tmp("b_trials.csv")));
  ASSERT_EQ(run("simulate --d 30 --m 8 --iters 5 --trials 4 --seed 10 --lambda 20 --out " + b).code, 0);
  EXPECT_NE(read_text(a), read_text(b));
}

TEST(Cli, PredictZeroIterationsAndNodeDoubling) {
  const auto r0 = run("predict --iters 0");
  ASSERT_EQ(r0.code, 0);
  const Table t0 = from_csv(r0.out);
  ASSERT_EQ(t0.rows.size(), 1u);
  EXPECT_EQ(as_double(t0.rows[0][1]), 0.99);

  const Table a = from_csv(run("predict --iters 100 --sigma 0.1 --nodes 64").out);
  const Table b = from_csv(run("predict --iters 100 --sigma 0.1 --nodes 128").out);
  ASSERT_EQ(a.rows.size(), 101u);
  ASSERT_EQ(b.rows.size(), 101u);
  const auto c = a.column("err_seq");
  for (std::size_t k = 0; k < a.rows.size(); ++k)
    EXPECT_NEAR(as_double(a.rows[k][c]), as_double(b.rows[k][c]), 1e-10 * as_double(b.rows[k][c]));
  EXPECT_NE(*a.meta("config_hash"), *b.meta("config_hash"));
}

TEST(Cli, ValidationErrorsExitTwo) {
  EXPECT_EQ(run("predict --m 500").code, 2);
  EXPECT_EQ(run("predict --sigma abc").code, 2);
  EXPECT_EQ(run("predict --alpha0 1.5").code, 2);
  EXPECT_EQ(run("predict --no-such-flag 1").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, IoErrorExitsOne) {
  EXPECT_EQ(run("predict --config /nonexistent/x.conf").code, 1);
  EXPECT_EQ(run("predict --iters 1 --out /nonexistent/dir/x.csv").code, 1);
}

TEST(Cli, NumericalFailureExitsThree) {
  EXPECT_EQ(run("predict --iters 3 --init-norm 1e160").code, 3);
  EXPECT_EQ(run("simulate --iters 3 --trials 1 --init-norm 1e300").code, 3);
}

TEST(Cli, TuneWithoutFeasiblePointExitsFour) {
  const auto r = run("tune --sigma 0.1 --iters 50 --target-err 1e-8");
  EXPECT_EQ(r.code, 4);
  const Table t = from_csv(r.out);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NE(t.meta("recommendation")->find("best floor"), std::string::npos);
}

TEST(Cli, CompareFromTruthWithoutNoiseHasNoGap) {
  const auto r = run("compare --d 40 --m 10 --sigma 0 --alpha0 1 --lambda 10 --iters 5 --trials 3");
  ASSERT_EQ(r.code, 0);
  const Table t = from_csv(r.out);
  ASSERT_EQ(t.rows.size(), 6u);
  const auto c = t.column("abs_gap");
  for (const auto& row : t.rows) EXPECT_LE(as_double(row[c]), 1e-9);
}

TEST(Cli, TuneSinglePointAndBatchRecommendation) {
  const auto one = run("tune --m 32 --lambda 100 --sigma 0.1 --iters 200 --target-err 0.01");
  ASSERT_EQ(one.code, 0);
  const Table t1 = from_csv(one.out);
  ASSERT_EQ(t1.rows.size(), 1u);
  EXPECT_EQ(t1.columns, (std::vector<std::string>{"m", "lambda", "tau", "floor", "samples", "theory_region"}));

  const auto grid = run("tune --m-grid 4,8,16,32 --coupled-lambda true --sigma 1e-5 --iters 3000 "
                        "--policy min-iterations --target-err 1e-8");
  ASSERT_EQ(grid.code, 0);
  const Table t = from_csv(grid.out);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.meta("recommendation")->rfind("m=32 ", 0), 0u);
}

TEST(Cli, JsonOutput) {
  const auto r = run("predict --iters 3 --format json");
  ASSERT_EQ(r.code, 0);
  const Table t = from_json(r.out);
  EXPECT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(*t.meta("tool"), "proxlin");
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const std::string cfg = tmp("run.conf");
  write_text(cfg, "# sample\nd = 64\nm = 8\nsigma = 0\nlambda = 40\niters = 7\n");
  const Table a = from_csv(run("predict --config " + cfg).out);
  EXPECT_EQ(a.rows.size(), 8u);
  EXPECT_EQ(*a.meta("config.d"), "64");
  const Table b = from_csv(run("predict --config " + cfg + " --iters 2").out);
  EXPECT_EQ(b.rows.size(), 3u);
  EXPECT_EQ(*b.meta("config.m"), "8");
}

TEST(Cli, DistanceInitialization) {
  const Table t = from_csv(run("predict --iters 0 --init-dist 0.02").out);
  EXPECT_NEAR(as_double(t.rows[0][1]), 0.99, 1e-12);
  EXPECT_EQ(*t.meta("config.init-mode"), "distance");
}
