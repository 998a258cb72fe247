#pragma once

// The four CLI commands as library functions producing tables.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "proxlin/config.hpp"
#include "proxlin/io.hpp"
#include "proxlin/predict.hpp"
#include "proxlin/simulate.hpp"
#include "proxlin/tune.hpp"

#ifndef PROXLIN_VERSION
#define PROXLIN_VERSION "0.0.0"
#endif

namespace proxlin {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitNoFeasible = 4;

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kIo: return kExitIo;
    case ErrorKind::kNoFeasiblePoint: return kExitNoFeasible;
    case ErrorKind::kNonConvergence:
    case ErrorKind::kIllConditionedEta:
    case ErrorKind::kSingularSystem:
    case ErrorKind::kIntegrationDomain:
    case ErrorKind::kNumericalInput: return kExitNonConvergence;
    default: return kExitValidation;
  }
}

struct Artifact {
  std::string suffix;  // appended to the output stem; empty for the primary table
  Table table;
};

struct CommandResult {
  std::vector<Artifact> artifacts;
  std::string summary;
  int exit_code = kExitOk;
};

inline Table base_table(const RunConfig& cfg, const std::string& command) {
  Table t;
  t.add_meta("tool", "proxlin");
  t.add_meta("version", PROXLIN_VERSION);
  t.add_meta("command", command);
  t.add_meta("config_hash", config_hash(cfg));
  t.add_meta("seed", std::to_string(cfg.seed));
  for (const auto& key : config_keys()) {
    if (key == "out" || key == "format" || key == "parallelism" || key == "per-trial") continue;
    t.add_meta("config." + key, get_field(cfg, key));
  }
  return t;
}

struct GapStats {
  std::vector<double> abs_gap;
  std::vector<double> rel_gap;
  double floor = 0.0;            // min of the predicted sequence
  double max_pre_floor_gap = 0.0;
  long argmax = -1;
  std::size_t pre_floor_points = 0;
};

/// rel_gap_t = |emp_t - pred_t| / max(pred_t, floor); the pre-floor maximum is taken over
/// t with pred_t >= cutoff.
inline GapStats compare_series(const std::vector<double>& emp, const std::vector<double>& pred,
                               double cutoff) {
  require(emp.size() == pred.size() && !pred.empty(), ErrorKind::kInvalidArgument,
          "compare: series lengths differ");
  GapStats g;
  g.floor = *std::min_element(pred.begin(), pred.end());
  g.abs_gap.resize(pred.size());
  g.rel_gap.resize(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    g.abs_gap[t] = std::abs(emp[t] - pred[t]);
    const double den = std::max(pred[t], g.floor);
    g.rel_gap[t] = den > 0.0 ? g.abs_gap[t] / den : (g.abs_gap[t] == 0.0 ? 0.0 : INFINITY);
    if (pred[t] >= cutoff) {
      ++g.pre_floor_points;
      if (g.argmax < 0 || g.rel_gap[t] > g.max_pre_floor_gap) {
        g.max_pre_floor_gap = g.rel_gap[t];
        g.argmax = long(t);
      }
    }
  }
  return g;
}

inline TrialConfig trial_config(const RunConfig& cfg) {
  return {cfg.problem(), cfg.init, cfg.iters, cfg.solver};
}

inline CommandResult cmd_simulate(const RunConfig& cfg) {
  validate(cfg);
  const auto res = run_trials(trial_config(cfg), std::size_t(cfg.trials), cfg.seed, std::size_t(cfg.parallelism));
  CommandResult out;
  Table agg = base_table(cfg, "simulate");
  agg.columns = {"t", "median_err", "q25_err", "q75_err"};
  for (const auto& r : res.aggregate) agg.add_row({r.t, r.median, r.q25, r.q75});
  out.artifacts.push_back({"", std::move(agg)});
  if (cfg.per_trial) {
    Table per = base_table(cfg, "simulate");
    per.columns = {"trial", "t", "alpha", "beta", "talpha", "tbeta", "err", "frob_err"};
    for (std::size_t k = 0; k < res.trials.size(); ++k)
      for (const auto& r : res.trials[k].records)
        per.add_row({long(k), r.t, r.state.alpha, r.state.beta, r.state.talpha, r.state.tbeta, r.err,
                     r.frob_err});
    out.artifacts.push_back({"_trials", std::move(per)});
  }
  out.summary = "simulated " + std::to_string(cfg.trials) + " trial(s) of " + std::to_string(cfg.iters) +
                " iterations; final median Err " + detail::fmt_double(res.aggregate.back().median);
  return out;
}

inline DetTrajectory predict_from(const RunConfig& cfg) {
  return predict_trajectory(cfg.initial_state(), cfg.iters, cfg.d, cfg.m, cfg.sigma, cfg.schedule, cfg.predict);
}

inline CommandResult cmd_predict(const RunConfig& cfg) {
  validate(cfg);
  const auto tr = predict_from(cfg);
  Table t = base_table(cfg, "predict");
  t.columns = {"t", "alpha", "beta", "talpha", "tbeta", "err_seq", "theory_region"};
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const auto& s = tr.states[k];
    t.add_row({long(k), s.alpha, s.beta, s.talpha, s.tbeta, tr.err_seq[k], bool(tr.theory_region[k])});
  }
  CommandResult out;
  out.summary = "predicted " + std::to_string(cfg.iters) + " iterations; final Err_seq " +
                detail::fmt_double(tr.err_seq.back());
  out.artifacts.push_back({"", std::move(t)});
  return out;
}

inline CommandResult cmd_compare(const RunConfig& cfg) {
  validate(cfg);
  const auto tr = predict_from(cfg);
  const auto res = run_trials(trial_config(cfg), std::size_t(cfg.trials), cfg.seed, std::size_t(cfg.parallelism));
  std::vector<double> med(res.aggregate.size());
  for (std::size_t k = 0; k < med.size(); ++k) med[k] = res.aggregate[k].median;
  const auto g = compare_series(med, tr.err_seq, cfg.gap_cutoff);

  Table t = base_table(cfg, "compare");
  t.add_meta("floor", detail::fmt_double(g.floor));
  t.add_meta("gap_cutoff", detail::fmt_double(cfg.gap_cutoff));
  t.add_meta("max_pre_floor_rel_gap", detail::fmt_double(g.max_pre_floor_gap));
  t.add_meta("max_pre_floor_rel_gap_t", std::to_string(g.argmax));
  t.columns = {"t", "median_emp", "err_seq", "abs_gap", "rel_gap"};
  for (std::size_t k = 0; k < med.size(); ++k)
    t.add_row({long(k), med[k], tr.err_seq[k], g.abs_gap[k], g.rel_gap[k]});
  CommandResult out;
  out.summary = "max pre-floor relative gap " + detail::fmt_double(g.max_pre_floor_gap) + " at t=" +
                std::to_string(g.argmax);
  out.artifacts.push_back({"", std::move(t)});
  return out;
}

inline TuneGrid tune_grid(const RunConfig& cfg) {
  TuneGrid g;
  g.m_values = cfg.m_grid.empty() ? std::vector<long>{cfg.m} : cfg.m_grid;
  g.lambda_values = cfg.lambda_grid.empty() ? std::vector<double>{cfg.schedule.lambda0} : cfg.lambda_grid;
  g.coupled_lambda = cfg.coupled_lambda;
  g.d = cfg.d;
  g.sigma = cfg.sigma;
  g.s0 = cfg.initial_state();
  g.horizon = cfg.iters;
  return g;
}

inline CommandResult cmd_tune(const RunConfig& cfg) {
  validate(cfg);
  const auto entries = sweep(tune_grid(cfg), cfg.predict, std::size_t(cfg.parallelism));
  const auto rep = make_report(entries, cfg.target_err);
  const auto rec = recommend(rep, cfg.policy, cfg.budget);

  Table t = base_table(cfg, "tune");
  t.add_meta("target_err", detail::fmt_double(cfg.target_err));
  t.add_meta("policy", to_string(cfg.policy));
  t.add_meta("budget", std::to_string(cfg.budget));
  t.add_meta("recommendation", rec.rationale);
  t.columns = {"m", "lambda", "tau", "floor", "samples", "theory_region"};
  for (const auto& r : rep.rows) {
    const auto anchor = theory_summary(cfg.d, r.m, cfg.sigma, r.lambda);
    const std::string tag = "m=" + std::to_string(r.m) + " lambda=" + detail::fmt_double(r.lambda);
    t.add_meta("anchor " + tag, "floor_order=" + detail::fmt_double(anchor.floor_order) +
                                    " rate_order=" + detail::fmt_double(anchor.rate_order));
    if (!r.error.empty()) t.add_meta("error " + tag, r.error);
    t.add_row({r.m, r.lambda, cell(r.tau), r.floor, cell(r.samples), r.theory_region});
  }
  CommandResult out;
  out.summary = rec.feasible ? "recommendation: " + rec.rationale : "no feasible point: " + rec.rationale;
  out.exit_code = rec.feasible ? kExitOk : kExitNoFeasible;
  out.artifacts.push_back({"", std::move(t)});
  return out;
}

inline CommandResult run_command(const RunConfig& cfg) {
  switch (cfg.mode) {
    case Mode::kSimulate: return cmd_simulate(cfg);
    case Mode::kPredict: return cmd_predict(cfg);
    case Mode::kCompare: return cmd_compare(cfg);
    case Mode::kTune: return cmd_tune(cfg);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown mode");
}

/// "<dir>/<stem><suffix><ext>" for an output path "<dir>/<stem><ext>".
inline std::string artifact_path(const std::string& out, const std::string& suffix) {
  if (suffix.empty()) return out;
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + suffix;
  return out.substr(0, dot) + suffix + out.substr(dot);
}

inline std::string render(const Table& t, OutputFormat f) {
  return f == OutputFormat::kCsv ? to_csv(t) : to_json(t);
}

/// Writes every artifact under cfg.out, or the primary table to `stdout_sink` when out is empty.
inline void emit(const RunConfig& cfg, const CommandResult& res, std::ostream& stdout_sink) {
  if (cfg.out.empty()) {
    if (!res.artifacts.empty()) stdout_sink << render(res.artifacts.front().table, cfg.format);
    return;
  }
  for (const auto& a : res.artifacts) write_text(artifact_path(cfg.out, a.suffix), render(a.table, cfg.format));
}

}  // namespace proxlin
