#pragma once

// Offline (m, lambda) tuning from predicted trajectories only.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "proxlin/error.hpp"
#include "proxlin/parallel.hpp"
#include "proxlin/predict.hpp"

namespace proxlin {

struct TuneGrid {
  std::vector<long> m_values;
  std::vector<double> lambda_values;
  bool coupled_lambda = false;  // lambda(m) = (1 + sigma^2) d / m instead of lambda_values
  long d = 0;
  double sigma = 0.0;
  StateVec s0;
  long horizon = 0;

  void validate() const {
    require(!m_values.empty(), ErrorKind::kInvalidArgument, "tune grid: m_values is empty");
    require(coupled_lambda || !lambda_values.empty(), ErrorKind::kInvalidArgument,
            "tune grid: lambda_values is empty");
    require(d >= 2, ErrorKind::kInvalidDimension, "tune grid: d must be at least 2");
    require(horizon >= 0, ErrorKind::kInvalidArgument, "tune grid: horizon must be nonnegative");
    require(std::isfinite(sigma) && sigma >= 0.0, ErrorKind::kInvalidArgument,
            "tune grid: sigma must be nonnegative");
    for (long m : m_values)
      require(m >= 1 && m <= d, ErrorKind::kInvalidArgument,
              "tune grid: m=" + std::to_string(m) + " outside [1, d]");
    for (double l : lambda_values)
      require(std::isfinite(l) && l > 0.0, ErrorKind::kInvalidArgument,
              "tune grid: lambda values must be positive");
  }
};

inline double coupled_lambda(long d, long m, double sigma) {
  return (1.0 + sigma * sigma) * double(d) / double(m);
}

struct GridPoint {
  long m = 0;
  double lambda = 0.0;
};

/// Grid points in m-major order.
inline std::vector<GridPoint> grid_points(const TuneGrid& g) {
  std::vector<GridPoint> out;
  for (long m : g.m_values) {
    if (g.coupled_lambda) {
      out.push_back({m, coupled_lambda(g.d, m, g.sigma)});
    } else {
      for (double l : g.lambda_values) out.push_back({m, l});
    }
  }
  return out;
}

struct SweepEntry {
  GridPoint point;
  std::optional<DetTrajectory> trajectory;
  std::string error;  // populated when prediction failed at this point
  ErrorKind error_kind = ErrorKind::kInvalidArgument;
};

inline std::vector<SweepEntry> sweep(const TuneGrid& grid, const PredictOptions& opt = {},
                                     std::size_t parallelism = 0) {
  grid.validate();
  const auto pts = grid_points(grid);
  std::vector<SweepEntry> out(pts.size());
  parallel_for(pts.size(), parallelism, [&](std::size_t i) {
    out[i].point = pts[i];
    try {
      out[i].trajectory = predict_trajectory(grid.s0, grid.horizon, grid.d, pts[i].m, grid.sigma,
                                             LambdaSchedule::constant(pts[i].lambda), opt);
    } catch (const Error& e) {
      out[i].error = e.what();
      out[i].error_kind = e.kind();
    }
  });
  return out;
}

/// First t with err_seq[t] <= target, or nullopt when never reached.
inline std::optional<long> iteration_complexity(const DetTrajectory& traj, double target) {
  require(target > 0.0, ErrorKind::kInvalidArgument, "target error must be positive");
  for (std::size_t t = 0; t < traj.err_seq.size(); ++t)
    if (traj.err_seq[t] <= target) return long(t);
  return std::nullopt;
}

struct TuneRow {
  long m = 0;
  double lambda = 0.0;
  std::optional<long> tau;
  double floor = 0.0;
  std::optional<long> samples;  // m * tau
  bool theory_region = false;
  std::string error;  // non-empty when prediction failed; floor is NaN then
};

struct TuneReport {
  std::vector<TuneRow> rows;
  double target_err = 0.0;
};

inline TuneReport make_report(const std::vector<SweepEntry>& entries, double target_err) {
  require(target_err > 0.0, ErrorKind::kInvalidArgument, "target error must be positive");
  TuneReport rep;
  rep.target_err = target_err;
  for (const auto& e : entries) {
    TuneRow r;
    r.m = e.point.m;
    r.lambda = e.point.lambda;
    if (!e.trajectory) {
      r.floor = NAN;
      r.error = e.error;
      rep.rows.push_back(r);
      continue;
    }
    const auto& tr = *e.trajectory;
    r.tau = iteration_complexity(tr, target_err);
    r.floor = *std::min_element(tr.err_seq.begin(), tr.err_seq.end());
    if (r.tau) r.samples = r.m * *r.tau;
    r.theory_region = tr.theory_region.front();
    rep.rows.push_back(r);
  }
  return rep;
}

enum class TunePolicy { kMinSamples, kMinIterations, kMinFloorWithinBudget };

inline std::string to_string(TunePolicy p) {
  switch (p) {
    case TunePolicy::kMinSamples: return "min-samples";
    case TunePolicy::kMinIterations: return "min-iterations";
    case TunePolicy::kMinFloorWithinBudget: return "min-floor";
  }
  return "unknown";
}

struct Recommendation {
  bool feasible = false;
  long m = 0;
  double lambda = 0.0;
  std::size_t row = 0;
  std::string rationale;
  double best_floor = NAN;  // over all rows, reported whether or not a point is feasible
};

/// Picks a grid point. For kMinFloorWithinBudget a row qualifies when tau <= budget;
/// the other policies need tau to exist. Ties go to smaller m, then smaller lambda.
inline Recommendation recommend(const TuneReport& rep, TunePolicy policy, long budget = 0) {
  require(!rep.rows.empty(), ErrorKind::kInvalidArgument, "recommend: empty report");
  require(policy != TunePolicy::kMinFloorWithinBudget || budget >= 0, ErrorKind::kInvalidArgument,
          "recommend: budget must be nonnegative");
  Recommendation best;
  for (const auto& r : rep.rows)
    if (std::isfinite(r.floor) && !(r.floor >= best.best_floor)) best.best_floor = r.floor;

  auto key = [&](const TuneRow& r) -> double {
    switch (policy) {
      case TunePolicy::kMinSamples: return double(*r.samples);
      case TunePolicy::kMinIterations: return double(*r.tau);
      case TunePolicy::kMinFloorWithinBudget: return r.floor;
    }
    return 0.0;
  };
  auto eligible = [&](const TuneRow& r) {
    if (!r.error.empty() || !r.tau) return false;
    return policy != TunePolicy::kMinFloorWithinBudget || *r.tau <= budget;
  };

  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    if (!eligible(r)) continue;
    if (!pick) {
      pick = i;
      continue;
    }
    const auto& p = rep.rows[*pick];
    const double kr = key(r), kp = key(p);
    if (kr < kp || (kr == kp && (r.m < p.m || (r.m == p.m && r.lambda < p.lambda)))) pick = i;
  }

  std::ostringstream os;
  os.precision(6);
  if (!pick) {
    os << "no grid point reaches target " << rep.target_err;
    if (policy == TunePolicy::kMinFloorWithinBudget) os << " within " << budget << " iterations";
    os << "; best floor achieved " << best.best_floor;
    best.rationale = os.str();
    return best;
  }
  const auto& r = rep.rows[*pick];
  best.feasible = true;
  best.m = r.m;
  best.lambda = r.lambda;
  best.row = *pick;
  os << "m=" << r.m << " lambda=" << r.lambda << " (" << to_string(policy) << "): tau=" << *r.tau
     << " samples=" << *r.samples << " floor=" << r.floor;
  best.rationale = os.str();
  return best;
}

struct TheorySummary {
  double floor_order = 0.0;  // sigma^2 d / (lambda m)
  double rate_order = 0.0;   // 1 / lambda
};

inline TheorySummary theory_summary(long d, long m, double sigma, double lambda) {
  require(d >= 1 && m >= 1 && m <= d, ErrorKind::kInvalidArgument, "theory_summary: need 1 <= m <= d");
  require(lambda > 0.0 && sigma >= 0.0, ErrorKind::kInvalidArgument,
          "theory_summary: lambda > 0 and sigma >= 0 required");
  return {sigma * sigma * double(d) / (lambda * double(m)), 1.0 / lambda};
}

}  // namespace proxlin
