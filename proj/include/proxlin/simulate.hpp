#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "proxlin/error.hpp"
#include "proxlin/model.hpp"
#include "proxlin/parallel.hpp"
#include "proxlin/rng.hpp"
#include "proxlin/state.hpp"
#include "proxlin/stats.hpp"

namespace proxlin {

enum class SolverPath {
  kAuto,      // Woodbury when m < d, dense otherwise
  kWoodbury,  // one m x m SPD solve
  kDense,     // one 2d x 2d SPD solve
};

struct StepResult {
  Vec mu;
  Vec nu;
  double residual = 0.0;  // ||(A^T A + lambda m I) x - rhs|| / ||rhs||
};

// Largest normal-equation residual accepted from a prox step.
inline constexpr double kStepResidualTol = 1e-8;

namespace detail {

struct ProxSystem {
  Mat A;    // m x 2d, rows [ (z_i.nu) x_i^T | (x_i.mu) z_i^T ]
  Vec rhs;  // A^T (y + W Wt) + lambda m [mu; nu]
  double shift = 0.0;
};

inline ProxSystem build_prox_system(const Vec& mu, const Vec& nu, const Batch& batch,
                                    double lambda) {
  const Eigen::Index m = batch.X.rows(), d = batch.X.cols();
  ProxSystem sys;
  const Vec w = batch.X * mu;
  const Vec wt = batch.Z * nu;
  sys.A.resize(m, 2 * d);
  sys.A.leftCols(d) = wt.asDiagonal() * batch.X;
  sys.A.rightCols(d) = w.asDiagonal() * batch.Z;
  sys.shift = lambda * static_cast<double>(m);
  Vec center(2 * d);
  center << mu, nu;
  sys.rhs = sys.A.transpose() * (batch.y + w.cwiseProduct(wt)) + sys.shift * center;
  return sys;
}

}  // namespace detail

/// (1/m)||F + J (x - center)||^2 + lambda ||x - center||^2 for the linearized residual
/// F = y - (X mu) o (Z nu) at center = (mu, nu). The prox step minimizes this over x.
inline double prox_subproblem_objective(const Vec& mu, const Vec& nu, const Batch& batch,
                                        double lambda, const Vec& mu_new, const Vec& nu_new) {
  const Eigen::Index m = batch.X.rows();
  const Vec w = batch.X * mu;
  const Vec wt = batch.Z * nu;
  const Vec F = batch.y - w.cwiseProduct(wt);
  const Vec dmu = mu_new - mu, dnu = nu_new - nu;
  // J = -[diag(wt) X | diag(w) Z]
  const Vec lin = F - wt.cwiseProduct(batch.X * dmu) - w.cwiseProduct(batch.Z * dnu);
  return lin.squaredNorm() / static_cast<double>(m) +
         lambda * (dmu.squaredNorm() + dnu.squaredNorm());
}

/// One stochastic prox-linear update, the closed-form minimizer of the regularized
/// linearized least-squares subproblem.
inline StepResult prox_linear_step(const Vec& mu, const Vec& nu, const Batch& batch,
                                   double lambda, SolverPath path = SolverPath::kAuto) {
  const Eigen::Index m = batch.X.rows(), d = batch.X.cols();
  require(mu.size() == d && nu.size() == d && batch.Z.rows() == m && batch.Z.cols() == d &&
              batch.y.size() == m,
          ErrorKind::kInvalidDimension, "prox step: inconsistent dimensions");
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::kInvalidArgument,
          "prox step: lambda must be positive");
  require(mu.allFinite() && nu.allFinite() && batch.X.allFinite() && batch.Z.allFinite() &&
              batch.y.allFinite(),
          ErrorKind::kNumericalInput, "prox step: non-finite input");

  const auto sys = detail::build_prox_system(mu, nu, batch, lambda);
  if (path == SolverPath::kAuto) path = m < d ? SolverPath::kWoodbury : SolverPath::kDense;

  Vec x;
  if (path == SolverPath::kWoodbury) {
    // (A^T A + c I)^{-1} = (1/c) (I - A^T (A A^T + c I)^{-1} A)
    Mat K = sys.A * sys.A.transpose();
    K.diagonal().array() += sys.shift;
    Eigen::LLT<Mat> llt(K);
    require(llt.info() == Eigen::Success, ErrorKind::kSingularSystem,
            "prox step: Woodbury system not positive definite");
    x = (sys.rhs - sys.A.transpose() * llt.solve(sys.A * sys.rhs)) / sys.shift;
  } else {
    Mat N = sys.A.transpose() * sys.A;
    N.diagonal().array() += sys.shift;
    Eigen::LLT<Mat> llt(N);
    require(llt.info() == Eigen::Success, ErrorKind::kSingularSystem,
            "prox step: normal equations not positive definite");
    x = llt.solve(sys.rhs);
  }
  require(x.allFinite(), ErrorKind::kSingularSystem, "prox step: non-finite solution");

  StepResult out;
  const Vec resid = sys.A.transpose() * (sys.A * x) + sys.shift * x - sys.rhs;
  const double scale = sys.rhs.norm();
  out.residual = scale > 0 ? resid.norm() / scale : resid.norm();
  out.mu = x.head(d);
  out.nu = x.tail(d);
  return out;
}

struct EmpiricalRecord {
  long t = 0;
  StateVec state;
  double err = 0.0;
  double frob_err = 0.0;
};

struct EmpiricalTrajectory {
  std::vector<EmpiricalRecord> records;
  ProblemParams params;
  Seed seed = 0;
};

inline EmpiricalRecord make_record(long t, const Vec& mu, const Vec& nu, const GroundTruth& gt) {
  EmpiricalRecord r;
  r.t = t;
  r.state = state_of(mu, nu, gt);
  r.err = err_of(r.state);
  r.frob_err = frob_err(mu, nu, gt);
  return r;
}

/// Runs T prox-linear steps from (mu0, nu0), drawing a fresh batch each iteration from
/// the stream derive_seed(seed, {kBatch, t}).
inline EmpiricalTrajectory run_empirical(const Vec& mu0, const Vec& nu0, const GroundTruth& gt,
                                         const ProblemParams& params, long T, Seed seed,
                                         SolverPath path = SolverPath::kAuto) {
  params.validate();
  require(T >= 0, ErrorKind::kInvalidArgument, "iteration count must be nonnegative");
  require(gt.dim() == params.d && mu0.size() == params.d && nu0.size() == params.d,
          ErrorKind::kInvalidDimension, "initialization does not match dimension d");

  EmpiricalTrajectory traj;
  traj.params = params;
  traj.seed = seed;
  traj.records.reserve(static_cast<std::size_t>(T) + 1);
  Vec mu = mu0, nu = nu0;
  traj.records.push_back(make_record(0, mu, nu, gt));
  for (long t = 0; t < T; ++t) {
    try {
      const Batch batch = sample_batch(gt, params, derive_seed(seed, {stream::kBatch, std::uint64_t(t)}));
      StepResult step = prox_linear_step(mu, nu, batch, params.schedule.value(t), path);
      require(step.residual <= kStepResidualTol, ErrorKind::kSingularSystem,
              "prox step residual " + std::to_string(step.residual) + " above tolerance");
      mu = std::move(step.mu);
      nu = std::move(step.nu);
    } catch (const Error& e) {
      throw e.with_step(t);
    }
    traj.records.push_back(make_record(t + 1, mu, nu, gt));
  }
  return traj;
}

/// Everything needed to reproduce a set of independent trials.
struct TrialConfig {
  ProblemParams params;
  InitSpec init;
  long T = 0;
  SolverPath path = SolverPath::kAuto;
};

struct AggregateRow {
  long t = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct TrialsResult {
  std::vector<EmpiricalTrajectory> trials;
  std::vector<AggregateRow> aggregate;
};

inline Seed trial_seed(Seed master, std::size_t trial) {
  return derive_seed(master, {stream::kTrial, trial});
}

inline EmpiricalTrajectory run_single_trial(const TrialConfig& cfg, Seed seed) {
  const GroundTruth gt = generate_ground_truth(cfg.params.d, derive_seed(seed, {stream::kGroundTruth}));
  const auto [mu0, nu0] = init_iterates(gt, cfg.init, derive_seed(seed, {stream::kInit}));
  return run_empirical(mu0, nu0, gt, cfg.params, cfg.T, seed, cfg.path);
}

inline std::vector<AggregateRow> aggregate_err(const std::vector<EmpiricalTrajectory>& trials) {
  require(!trials.empty(), ErrorKind::kInvalidArgument, "nothing to aggregate");
  const std::size_t n = trials.front().records.size();
  std::vector<AggregateRow> out(n);
  std::vector<double> column(trials.size());
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < trials.size(); ++k) column[k] = trials[k].records[t].err;
    out[t].t = trials.front().records[t].t;
    out[t].median = quantile(column, 0.5);
    out[t].q25 = quantile(column, 0.25);
    out[t].q75 = quantile(column, 0.75);
  }
  return out;
}

inline TrialsResult run_trials(const TrialConfig& cfg, std::size_t n_trials, Seed master_seed,
                               std::size_t parallelism = 0) {
  require(n_trials >= 1, ErrorKind::kInvalidArgument, "need at least one trial");
  cfg.params.validate();
  TrialsResult res;
  res.trials.resize(n_trials);
  parallel_for(n_trials, parallelism, [&](std::size_t i) {
    res.trials[i] = run_single_trial(cfg, trial_seed(master_seed, i));
  });
  res.aggregate = aggregate_err(res.trials);
  return res;
}

}  // namespace proxlin
