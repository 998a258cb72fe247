#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "proxlin/commands.hpp"

using namespace proxlin;

namespace {

Table sample_table() {
  Table t;
  t.add_meta("tool", "proxlin");
  t.add_meta("note", "a: b, c");
  t.columns = {"t", "x", "flag", "tau"};
  t.add_row({0L, 0.1, true, cell(std::optional<long>{})});
  t.add_row({1L, 1.0 / 3.0, false, cell(std::optional<long>{42})});
  t.add_row({2L, 6.02214076e23, true, 7L});
  t.add_row({3L, -4.9e-324, false, -1L});
  return t;
}

void expect_same_cells(const Table& a, const Table& b) {
  ASSERT_EQ(a.columns, b.columns);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    for (std::size_t j = 0; j < a.rows[i].size(); ++j) {
      const auto &x = a.rows[i][j], &y = b.rows[i][j];
      if (std::holds_alternative<double>(x) && std::holds_alternative<double>(y))
        EXPECT_EQ(std::get<double>(x), std::get<double>(y)) << i << "," << j;
      else
        EXPECT_EQ(x, y) << i << "," << j;
    }
}

}  // namespace

TEST(Config, DefaultsValidate) {
  RunConfig c;
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.d, 200);
  EXPECT_EQ(c.predict.nodes, 64);
}

TEST(Config, SerializeParseRoundTrip) {
  RunConfig c;
  c.mode = Mode::kTune;
  c.sigma = 0.1;
  c.schedule = LambdaSchedule::delayed_linear(100.0, 1500, 1.0, RampOffset::kAbsolute);
  c.init = InitSpec::distance(0.02);
  c.predict.v4_denominator = V4Denominator::kAsPrinted;
  c.predict.beta_exponent = BetaExponent::kInverseSqrt;
  c.predict.method = ExpectationMethod::kTensorHermite;
  c.solver = SolverPath::kDense;
  c.policy = TunePolicy::kMinFloorWithinBudget;
  c.m_grid = {4, 8, 16};
  c.lambda_grid = {1.0, 0.1, 1.0 / 3.0};
  c.coupled_lambda = true;
  c.out = "/tmp/x.json";
  c.format = OutputFormat::kJson;
  c.per_trial = false;
  c.seed = 18446744073709551615ULL;
  const RunConfig back = parse_config(serialize_config(c));
  EXPECT_EQ(back, c);
}

TEST(Config, EveryKeyRoundTripsThroughGetAndSet) {
  RunConfig c;
  for (const auto& k : config_keys()) {
    RunConfig x;
    set_field(x, k, get_field(c, k));
    EXPECT_EQ(get_field(x, k), get_field(c, k)) << k;
  }
}

TEST(Config, CommentsAndWhitespace) {
  const auto c = parse_config("# header\n\n  d = 64   # trailing\nsigma=0.5\n\tlambda =  7\n");
  EXPECT_EQ(c.d, 64);
  EXPECT_EQ(c.sigma, 0.5);
  EXPECT_EQ(c.schedule.lambda0, 7.0);
  RunConfig base;
  base.m = 8;
  EXPECT_EQ(parse_config("d = 64\n", base).m, 8);
}

TEST(Config, UnknownKeyAndMalformedLines) {
  try {
    parse_config("bogus = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(parse_config("d 64\n"), Error);
}

TEST(Config, BadValueNamesItsField) {
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{{"d", "12x"},
                                                                               {"sigma", "abc"},
                                                                               {"schedule", "cosine"},
                                                                               {"format", "xml"},
                                                                               {"per-trial", "maybe"},
                                                                               {"m-grid", "4,,8"},
                                                                               {"seed", "-3"}}) {
    RunConfig c;
    try {
      set_field(c, k, v);
      FAIL() << k;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find(k), std::string::npos) << e.what();
    }
  }
}

TEST(Config, ValidationNamesInvalidField) {
  auto expect_field = [](RunConfig c, const std::string& key) {
    try {
      validate(c);
      FAIL() << key;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
      EXPECT_NE(std::string(e.what()).find("'" + key), std::string::npos) << e.what();
    }
  };
  RunConfig c;
  c.m = 0;
  expect_field(c, "m");
  c = {};
  c.m = 300;
  expect_field(c, "m");
  c = {};
  c.sigma = -1;
  expect_field(c, "sigma");
  c = {};
  c.schedule.lambda0 = 0;
  expect_field(c, "lambda");
  c = {};
  c.trials = 0;
  expect_field(c, "trials");
  c = {};
  c.predict.nodes = 1;
  expect_field(c, "nodes");
  c = {};
  c.init = InitSpec::overlap(1.5);
  expect_field(c, "alpha0");
  c = {};
  c.m_grid = {500};
  expect_field(c, "m-grid");
}

TEST(Config, GridMakesScalarBatchIrrelevantInTune) {
  RunConfig c;
  c.mode = Mode::kTune;
  c.m = 1000;
  c.m_grid = {4, 8};
  EXPECT_NO_THROW(validate(c));
  c.mode = Mode::kPredict;
  EXPECT_THROW(validate(c), Error);
}

TEST(Config, HashIgnoresPresentationFields) {
  RunConfig a, b;
  b.out = "/tmp/other.csv";
  b.format = OutputFormat::kJson;
  b.parallelism = 4;
  b.per_trial = false;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, LoadMissingFileIsIoError) {
  try {
    load_config("/nonexistent/dir/cfg.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(TableIo, CsvRoundTripPreservesDoublesBitForBit) {
  const Table t = sample_table();
  const Table back = from_csv(to_csv(t));
  EXPECT_EQ(back.metadata, t.metadata);
  expect_same_cells(t, back);
}

TEST(TableIo, JsonRoundTripPreservesDoublesBitForBit) {
  const Table t = sample_table();
  const Table back = from_json(to_json(t));
  EXPECT_EQ(back.metadata, t.metadata);
  expect_same_cells(t, back);
}

TEST(TableIo, RandomDoublesSurviveBothFormats) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-30, 30);
  Table t;
  t.columns = {"v"};
  for (int i = 0; i < 2000; ++i) t.add_row({std::copysign(std::pow(10.0, u(g)), u(g))});
  expect_same_cells(t, from_csv(to_csv(t)));
  expect_same_cells(t, from_json(to_json(t)));
}

TEST(TableIo, NullAndNonFiniteEncoding) {
  Table t;
  t.columns = {"a", "b"};
  t.add_row({std::monostate{}, std::numeric_limits<double>::quiet_NaN()});
  const std::string csv = to_csv(t);
  EXPECT_NE(csv.find("NA,nan"), std::string::npos);
  const std::string json = to_json(t);
  const Table back = from_json(json);
  EXPECT_TRUE(std::holds_alternative<std::monostate>(back.rows[0][0]));
  EXPECT_TRUE(std::holds_alternative<std::monostate>(back.rows[0][1]));
  EXPECT_TRUE(std::isnan(as_double(back.rows[0][1])));
}

TEST(TableIo, CsvLayout) {
  const std::string csv = to_csv(sample_table());
  EXPECT_EQ(csv.rfind("# tool: proxlin\n# note: a: b, c\nt,x,flag,tau\n0,0.10000000000000001,true,NA\n", 0), 0u);
}

TEST(TableIo, RowWidthAndColumnLookup) {
  Table t = sample_table();
  EXPECT_THROW(t.add_row({1L}), Error);
  EXPECT_EQ(t.column("flag"), 2u);
  EXPECT_THROW(t.column("nope"), Error);
  EXPECT_EQ(*t.meta("tool"), "proxlin");
  EXPECT_FALSE(t.meta("missing"));
}

TEST(TableIo, MalformedInputIsIoError) {
  EXPECT_THROW(from_json("{not json"), Error);
  EXPECT_THROW(from_csv("a,b\n1,zz\n"), Error);
}

TEST(TableIo, FileRoundTrip) {
  const std::string path = ::testing::TempDir() + "proxlin_io_test.csv";
  write_text(path, to_csv(sample_table()));
  expect_same_cells(sample_table(), from_csv(read_text(path)));
  std::remove(path.c_str());
  EXPECT_THROW(read_text(path), Error);
  EXPECT_THROW(write_text("/nonexistent/dir/x.csv", "x"), Error);
}

TEST(Commands, ArtifactPath) {
  EXPECT_EQ(artifact_path("out/run.csv", ""), "out/run.csv");
  EXPECT_EQ(artifact_path("out/run.csv", "_trials"), "out/run_trials.csv");
  EXPECT_EQ(artifact_path("out.d/run", "_trials"), "out.d/run_trials");
  EXPECT_EQ(artifact_path("run", "_trials"), "run_trials");
}

TEST(Commands, CompareSeriesGapDefinition) {
  const std::vector<double> pred = {1.0, 0.1, 0.01, 1e-12, 1e-12};
  const std::vector<double> emp = {1.1, 0.1, 0.012, 1e-6, 2e-12};
  const auto g = compare_series(emp, pred, 1e-9);
  EXPECT_EQ(g.floor, 1e-12);
  EXPECT_NEAR(g.rel_gap[0], 0.1, 1e-15);
  EXPECT_EQ(g.rel_gap[1], 0.0);
  EXPECT_NEAR(g.rel_gap[2], 0.2, 1e-14);
  EXPECT_NEAR(g.rel_gap[3], (1e-6 - 1e-12) / 1e-12, 1e-3);
  EXPECT_EQ(g.pre_floor_points, 3u);
  EXPECT_NEAR(g.max_pre_floor_gap, 0.2, 1e-14);
  EXPECT_EQ(g.argmax, 2);
  EXPECT_NEAR(g.abs_gap[0], 0.1, 1e-15);
  EXPECT_THROW(compare_series({1.0}, {1.0, 2.0}, 0.0), Error);
}

TEST(Commands, ExitCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::kIo), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::kInvalidArgument), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kInvalidDimension), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kInfeasibleInit), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kNonConvergence), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kIllConditionedEta), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kNoFeasiblePoint), 4);
}

TEST(Commands, PredictTableMatchesLibraryAndCarriesProvenance) {
  RunConfig c;
  c.iters = 20;
  const auto res = cmd_predict(c);
  ASSERT_EQ(res.artifacts.size(), 1u);
  const Table& t = res.artifacts[0].table;
  EXPECT_EQ(t.columns, (std::vector<std::string>{"t", "alpha", "beta", "talpha", "tbeta", "err_seq", "theory_region"}));
  ASSERT_EQ(t.rows.size(), 21u);
  const auto tr = predict_from(c);
  for (std::size_t k = 0; k < t.rows.size(); ++k) EXPECT_EQ(as_double(t.rows[k][5]), tr.err_seq[k]);
  EXPECT_EQ(*t.meta("config_hash"), config_hash(c));
  EXPECT_EQ(*t.meta("seed"), "1");
  EXPECT_EQ(*t.meta("version"), PROXLIN_VERSION);
  EXPECT_EQ(*t.meta("config.d"), "200");
  EXPECT_FALSE(t.meta("config.out"));
}

TEST(Commands, SimulateWritesAggregateAndPerTrialArtifacts) {
  RunConfig c;
  c.mode = Mode::kSimulate;
  c.d = 20;
  c.m = 10;
  c.iters = 3;
  c.trials = 2;
  c.schedule = LambdaSchedule::constant(10.0);
  const auto res = run_command(c);
  ASSERT_EQ(res.artifacts.size(), 2u);
  EXPECT_EQ(res.artifacts[0].table.rows.size(), 4u);
  EXPECT_EQ(res.artifacts[1].suffix, "_trials");
  EXPECT_EQ(res.artifacts[1].table.rows.size(), 8u);
  c.per_trial = false;
  EXPECT_EQ(run_command(c).artifacts.size(), 1u);
}

TEST(Commands, TuneInfeasibleReturnsExitFour) {
  RunConfig c;
  c.mode = Mode::kTune;
  c.sigma = 0.1;
  c.iters = 50;
  c.target_err = 1e-8;
  const auto res = run_command(c);
  EXPECT_EQ(res.exit_code, kExitNoFeasible);
  EXPECT_NE(res.summary.find("best floor"), std::string::npos);
  ASSERT_EQ(res.artifacts[0].table.rows.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<std::monostate>(res.artifacts[0].table.rows[0][2]));
}

TEST(Commands, EmitToStreamWithoutOutputPath) {
  RunConfig c;
  c.iters = 0;
  std::ostringstream os;
  emit(c, cmd_predict(c), os);
  const Table t = from_csv(os.str());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(as_double(t.rows[0][1]), 0.99);
}
