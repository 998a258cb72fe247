#pragma once

// Flat key = value run configuration shared by the config file and CLI flags.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "proxlin/error.hpp"
#include "proxlin/model.hpp"
#include "proxlin/predict.hpp"
#include "proxlin/schedule.hpp"
#include "proxlin/simulate.hpp"
#include "proxlin/tune.hpp"

namespace proxlin {

enum class Mode { kSimulate, kPredict, kCompare, kTune };
enum class OutputFormat { kCsv, kJson };

struct RunConfig {
  Mode mode = Mode::kPredict;
  long d = 200;
  long m = 32;
  double sigma = 0.01;
  LambdaSchedule schedule = LambdaSchedule::constant(100.0);
  long iters = 1000;
  long trials = 30;
  Seed seed = 1;
  InitSpec init = InitSpec::overlap(0.99);
  std::string out;
  OutputFormat format = OutputFormat::kCsv;
  PredictOptions predict;
  SolverPath solver = SolverPath::kAuto;
  TunePolicy policy = TunePolicy::kMinSamples;
  double target_err = 1e-8;
  long budget = 3000;
  std::vector<long> m_grid;
  std::vector<double> lambda_grid;
  bool coupled_lambda = false;
  long parallelism = 0;
  double gap_cutoff = 1e-9;
  bool per_trial = true;

  ProblemParams problem() const { return {d, m, sigma, schedule}; }

  StateVec initial_state() const {
    const auto [a, b] = init.targets();
    return {a, b, a, b};
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value,
                                   const std::string& expected) {
  throw Error(ErrorKind::kInvalidArgument,
              "config field '" + key + "': invalid value '" + value + "' (expected " + expected + ")");
}

inline double parse_double(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) bad_value(key, v, "a real number");
  return x;
}

inline long parse_long(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  errno = 0;
  const long x = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) bad_value(key, v, "an integer");
  return x;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno == ERANGE)
    bad_value(key, v, "a nonnegative integer");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(key, v, "true|false");
}

inline std::vector<std::string> split_list(const std::string& key, const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v + ",");
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    require(!item.empty(), ErrorKind::kInvalidArgument, "config field '" + key + "': empty list entry");
    out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) out += fmt_double(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

template <typename E>
E parse_enum(const std::string& key, const std::string& v,
             std::initializer_list<std::pair<const char*, E>> table) {
  const std::string s = trim(v);
  std::string names;
  for (const auto& [name, e] : table) {
    if (s == name) return e;
    if (!names.empty()) names += '|';
    names += name;
  }
  bad_value(key, v, names);
}

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::kSimulate: return "simulate";
    case Mode::kPredict: return "predict";
    case Mode::kCompare: return "compare";
    case Mode::kTune: return "tune";
  }
  return "predict";
}

inline std::string to_string(SolverPath p) {
  switch (p) {
    case SolverPath::kAuto: return "auto";
    case SolverPath::kWoodbury: return "woodbury";
    case SolverPath::kDense: return "dense";
  }
  return "auto";
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool hashed = true;  // part of the numerical identity of a run
};

inline const std::vector<Field>& fields() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<Field> table = {
      {"mode",
       [](C& c, S v) {
         c.mode = parse_enum<Mode>("mode", v, {{"simulate", Mode::kSimulate}, {"predict", Mode::kPredict},
                                               {"compare", Mode::kCompare}, {"tune", Mode::kTune}});
       },
       [](const C& c) { return to_string(c.mode); }},
      {"d", [](C& c, S v) { c.d = parse_long("d", v); }, [](const C& c) { return std::to_string(c.d); }},
      {"m", [](C& c, S v) { c.m = parse_long("m", v); }, [](const C& c) { return std::to_string(c.m); }},
      {"sigma", [](C& c, S v) { c.sigma = parse_double("sigma", v); },
       [](const C& c) { return fmt_double(c.sigma); }},
      {"lambda", [](C& c, S v) { c.schedule.lambda0 = parse_double("lambda", v); },
       [](const C& c) { return fmt_double(c.schedule.lambda0); }},
      {"schedule",
       [](C& c, S v) {
         c.schedule.kind = parse_enum<ScheduleKind>(
             "schedule", v, {{"constant", ScheduleKind::kConstant}, {"delayed-linear", ScheduleKind::kDelayedLinear}});
       },
       [](const C& c) { return proxlin::to_string(c.schedule.kind); }},
      {"t0", [](C& c, S v) { c.schedule.t0 = parse_long("t0", v); },
       [](const C& c) { return std::to_string(c.schedule.t0); }},
      {"slope", [](C& c, S v) { c.schedule.slope = parse_double("slope", v); },
       [](const C& c) { return fmt_double(c.schedule.slope); }},
      {"ramp-offset",
       [](C& c, S v) {
         c.schedule.offset = parse_enum<RampOffset>(
             "ramp-offset", v, {{"relative", RampOffset::kRelative}, {"absolute", RampOffset::kAbsolute}});
       },
       [](const C& c) { return proxlin::to_string(c.schedule.offset); }},
      {"iters", [](C& c, S v) { c.iters = parse_long("iters", v); },
       [](const C& c) { return std::to_string(c.iters); }},
      {"trials", [](C& c, S v) { c.trials = parse_long("trials", v); },
       [](const C& c) { return std::to_string(c.trials); }},
      {"seed", [](C& c, S v) { c.seed = parse_u64("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"alpha0", [](C& c, S v) { c.init.alpha0 = parse_double("alpha0", v); },
       [](const C& c) { return fmt_double(c.init.alpha0); }},
      {"init-dist", [](C& c, S v) { c.init.dist_sq = parse_double("init-dist", v); },
       [](const C& c) { return fmt_double(c.init.dist_sq); }},
      {"init-norm", [](C& c, S v) { c.init.norm = parse_double("init-norm", v); },
       [](const C& c) { return fmt_double(c.init.norm); }},
      {"init-mode",
       [](C& c, S v) {
         c.init.mode = parse_enum<InitMode>("init-mode", v,
                                            {{"overlap", InitMode::kOverlap}, {"distance", InitMode::kDistance}});
       },
       [](const C& c) { return std::string(c.init.mode == InitMode::kOverlap ? "overlap" : "distance"); }},
      {"out", [](C& c, S v) { c.out = trim(v); }, [](const C& c) { return c.out; }, false},
      {"format",
       [](C& c, S v) {
         c.format = parse_enum<OutputFormat>("format", v, {{"csv", OutputFormat::kCsv}, {"json", OutputFormat::kJson}});
       },
       [](const C& c) { return std::string(c.format == OutputFormat::kCsv ? "csv" : "json"); }, false},
      {"nodes", [](C& c, S v) { c.predict.nodes = int(parse_long("nodes", v)); },
       [](const C& c) { return std::to_string(c.predict.nodes); }},
      {"quadrature",
       [](C& c, S v) {
         c.predict.method = parse_enum<ExpectationMethod>(
             "quadrature", v, {{"polar", ExpectationMethod::kPolar}, {"tensor", ExpectationMethod::kTensorHermite}});
       },
       [](const C& c) { return proxlin::to_string(c.predict.method); }},
      {"v4-denominator",
       [](C& c, S v) {
         c.predict.v4_denominator = parse_enum<V4Denominator>(
             "v4-denominator", v, {{"symmetric", V4Denominator::kSymmetric}, {"as-printed", V4Denominator::kAsPrinted}});
       },
       [](const C& c) { return proxlin::to_string(c.predict.v4_denominator); }},
      {"beta-exponent",
       [](C& c, S v) {
         c.predict.beta_exponent = parse_enum<BetaExponent>(
             "beta-exponent", v, {{"sqrt", BetaExponent::kSqrt}, {"inverse-sqrt", BetaExponent::kInverseSqrt}});
       },
       [](const C& c) { return proxlin::to_string(c.predict.beta_exponent); }},
      {"solver",
       [](C& c, S v) {
         c.solver = parse_enum<SolverPath>(
             "solver", v, {{"auto", SolverPath::kAuto}, {"woodbury", SolverPath::kWoodbury}, {"dense", SolverPath::kDense}});
       },
       [](const C& c) { return to_string(c.solver); }},
      {"policy",
       [](C& c, S v) {
         c.policy = parse_enum<TunePolicy>("policy", v,
                                           {{"min-samples", TunePolicy::kMinSamples},
                                            {"min-iterations", TunePolicy::kMinIterations},
                                            {"min-floor", TunePolicy::kMinFloorWithinBudget}});
       },
       [](const C& c) { return proxlin::to_string(c.policy); }},
      {"target-err", [](C& c, S v) { c.target_err = parse_double("target-err", v); },
       [](const C& c) { return fmt_double(c.target_err); }},
      {"budget", [](C& c, S v) { c.budget = parse_long("budget", v); },
       [](const C& c) { return std::to_string(c.budget); }},
      {"m-grid",
       [](C& c, S v) {
         c.m_grid.clear();
         for (const auto& s : split_list("m-grid", v)) c.m_grid.push_back(parse_long("m-grid", s));
       },
       [](const C& c) { return join_list(c.m_grid); }},
      {"lambda-grid",
       [](C& c, S v) {
         c.lambda_grid.clear();
         for (const auto& s : split_list("lambda-grid", v)) c.lambda_grid.push_back(parse_double("lambda-grid", s));
       },
       [](const C& c) { return join_list(c.lambda_grid); }},
      {"coupled-lambda", [](C& c, S v) { c.coupled_lambda = parse_bool("coupled-lambda", v); },
       [](const C& c) { return std::string(c.coupled_lambda ? "true" : "false"); }},
      {"gap-cutoff", [](C& c, S v) { c.gap_cutoff = parse_double("gap-cutoff", v); },
       [](const C& c) { return fmt_double(c.gap_cutoff); }},
      {"per-trial", [](C& c, S v) { c.per_trial = parse_bool("per-trial", v); },
       [](const C& c) { return std::string(c.per_trial ? "true" : "false"); }, false},
      {"parallelism", [](C& c, S v) { c.parallelism = parse_long("parallelism", v); },
       [](const C& c) { return std::to_string(c.parallelism); }, false},
  };
  return table;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : detail::fields()) out.push_back(f.key);
  return out;
}

inline void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : detail::fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown config field '" + key + "'");
}

inline std::string get_field(const RunConfig& cfg, const std::string& key) {
  for (const auto& f : detail::fields())
    if (key == f.key) return f.get(cfg);
  throw Error(ErrorKind::kInvalidArgument, "unknown config field '" + key + "'");
}

/// Parses "key = value" lines on top of `base`. Blank lines and '#' comments are ignored.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kInvalidArgument,
            "config line " + std::to_string(lineno) + ": expected key = value");
    set_field(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::kIo, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline std::string serialize_config(const RunConfig& cfg, bool hashed_only = false) {
  std::string out;
  for (const auto& f : detail::fields()) {
    if (hashed_only && !f.hashed) continue;
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hex digest of the fields that determine the numbers a run produces.
inline std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_config(cfg, true))));
  return buf;
}

inline void validate(const RunConfig& c) {
  auto field = [](bool ok, const std::string& key, const std::string& what) {
    require(ok, ErrorKind::kInvalidArgument, "config field '" + key + "': " + what);
  };
  field(c.d >= 2, "d", "must be at least 2");
  const bool grid_m = c.mode == Mode::kTune && !c.m_grid.empty();
  field(grid_m || (c.m >= 1 && c.m <= c.d), "m", "must satisfy 1 <= m <= d");
  field(std::isfinite(c.sigma) && c.sigma >= 0.0, "sigma", "must be nonnegative");
  field(std::isfinite(c.schedule.lambda0) && c.schedule.lambda0 > 0.0, "lambda", "must be positive");
  field(c.schedule.t0 >= 0, "t0", "must be nonnegative");
  field(std::isfinite(c.schedule.slope) && c.schedule.slope > 0.0, "slope", "must be positive");
  field(c.iters >= 0, "iters", "must be nonnegative");
  field(c.trials >= 1, "trials", "must be at least 1");
  field(c.predict.nodes >= 2 && c.predict.nodes <= 4096, "nodes", "must lie in [2, 4096]");
  field(c.target_err > 0.0, "target-err", "must be positive");
  field(c.budget >= 0, "budget", "must be nonnegative");
  field(c.parallelism >= 0, "parallelism", "must be nonnegative");
  field(c.gap_cutoff >= 0.0, "gap-cutoff", "must be nonnegative");
  for (long m : c.m_grid) field(m >= 1 && m <= c.d, "m-grid", "entries must satisfy 1 <= m <= d");
  for (double l : c.lambda_grid) field(std::isfinite(l) && l > 0.0, "lambda-grid", "entries must be positive");
  try {
    (void)c.init.targets();
  } catch (const Error& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("config field 'alpha0/init-dist': ") + e.what());
  }
}

}  // namespace proxlin
