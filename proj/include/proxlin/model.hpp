#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "proxlin/error.hpp"
#include "proxlin/rng.hpp"
#include "proxlin/schedule.hpp"

namespace proxlin {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Unit-norm coefficient pair (mu_star, nu_star) defining the rank-one target.
struct GroundTruth {
  Vec mu_star;
  Vec nu_star;

  Eigen::Index dim() const { return mu_star.size(); }
};

struct ProblemParams {
  long d = 0;
  long m = 0;
  double sigma = 0.0;
  LambdaSchedule schedule;

  void validate() const {
    require(d >= 1, ErrorKind::kInvalidDimension, "d must be positive");
    require(m >= 1 && m <= d, ErrorKind::kInvalidArgument,
            "batch size must satisfy 1 <= m <= d (m=" + std::to_string(m) +
                ", d=" + std::to_string(d) + ")");
    require(std::isfinite(sigma) && sigma >= 0.0, ErrorKind::kInvalidArgument,
            "sigma must be nonnegative");
    schedule.validate();
  }
};

/// One fresh mini-batch; rows of X and Z are the sensing vectors.
struct Batch {
  Mat X;
  Mat Z;
  Vec eps;
  Vec y;
};

inline Vec random_unit_vector(Rng& rng, Eigen::Index d) {
  Vec v = rng.normal_vector(d);
  double n = v.norm();
  while (n == 0.0) {
    v = rng.normal_vector(d);
    n = v.norm();
  }
  return v / n;
}

inline GroundTruth generate_ground_truth(long d, Seed seed) {
  require(d >= 2, ErrorKind::kInvalidDimension, "ground truth needs d >= 2");
  Rng rng(seed);
  GroundTruth gt;
  gt.mu_star = random_unit_vector(rng, d);
  gt.nu_star = random_unit_vector(rng, d);
  return gt;
}

inline Batch sample_batch(const GroundTruth& gt, const ProblemParams& params, Seed seed) {
  params.validate();
  require(gt.dim() == params.d, ErrorKind::kInvalidDimension,
          "ground truth dimension does not match d");
  Rng rng(seed);
  Batch b;
  b.X = rng.normal_matrix(params.m, params.d);
  b.Z = rng.normal_matrix(params.m, params.d);
  b.eps = rng.normal_vector(params.m) * params.sigma;
  b.y = (b.X * gt.mu_star).cwiseProduct(b.Z * gt.nu_star) + b.eps;
  return b;
}

enum class InitMode { kOverlap, kDistance };

/// Controlled initialization, applied identically to the mu- and nu-side.
///   kOverlap:  <mu0, mu_star> = alpha0 and ||mu0|| = norm
///   kDistance: ||mu0 - mu_star||^2 = dist_sq and ||mu0|| = norm
struct InitSpec {
  InitMode mode = InitMode::kOverlap;
  double alpha0 = 0.99;
  double dist_sq = 0.02;
  double norm = 1.0;

  static InitSpec overlap(double alpha0, double norm = 1.0) {
    InitSpec s;
    s.mode = InitMode::kOverlap;
    s.alpha0 = alpha0;
    s.norm = norm;
    return s;
  }

  static InitSpec distance(double dist_sq, double norm = 1.0) {
    InitSpec s;
    s.mode = InitMode::kDistance;
    s.dist_sq = dist_sq;
    s.norm = norm;
    return s;
  }

  // (alpha, beta) targets implied by the spec; throws when geometrically infeasible.
  std::pair<double, double> targets() const {
    require(std::isfinite(norm) && norm > 0.0, ErrorKind::kInfeasibleInit,
            "initialization norm must be positive");
    double alpha = alpha0;
    if (mode == InitMode::kDistance) {
      require(std::isfinite(dist_sq) && dist_sq >= 0.0, ErrorKind::kInfeasibleInit,
              "target distance must be nonnegative");
      // (alpha - 1)^2 + beta^2 = dist_sq together with alpha^2 + beta^2 = norm^2
      alpha = 0.5 * (norm * norm + 1.0 - dist_sq);
    }
    require(std::isfinite(alpha) && std::abs(alpha) <= norm * (1.0 + 1e-15),
            ErrorKind::kInfeasibleInit,
            "infeasible initialization: |alpha0| = " + std::to_string(std::abs(alpha)) +
                " exceeds norm " + std::to_string(norm));
    const double beta = std::sqrt(std::max(0.0, norm * norm - alpha * alpha));
    return {alpha, beta};
  }

  bool operator==(const InitSpec&) const = default;
};

namespace detail {
inline Vec place(const Vec& star, double alpha, double beta, Rng& rng) {
  Vec u = rng.normal_vector(star.size());
  u -= u.dot(star) * star;
  u -= u.dot(star) * star;
  u.normalize();
  return alpha * star + beta * u;
}
}  // namespace detail

inline std::pair<Vec, Vec> init_iterates(const GroundTruth& gt, const InitSpec& spec, Seed seed) {
  require(gt.dim() >= 2, ErrorKind::kInvalidDimension, "initialization needs d >= 2");
  const auto [alpha, beta] = spec.targets();
  Rng rng(seed);
  Vec mu0 = detail::place(gt.mu_star, alpha, beta, rng);
  Vec nu0 = detail::place(gt.nu_star, alpha, beta, rng);
  return {std::move(mu0), std::move(nu0)};
}

}  // namespace proxlin
