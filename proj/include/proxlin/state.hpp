#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "proxlin/model.hpp"

namespace proxlin {

/// Four-dimensional summary of an iterate pair relative to the ground truth:
/// alpha = <mu, mu_star>, beta = ||P_perp mu||, and the same for nu (talpha, tbeta).
struct StateVec {
  double alpha = 0.0;
  double beta = 0.0;
  double talpha = 0.0;
  double tbeta = 0.0;

  double L() const { return std::hypot(alpha, beta); }
  double Lt() const { return std::hypot(talpha, tbeta); }
  double L_sq() const { return alpha * alpha + beta * beta; }
  double Lt_sq() const { return talpha * talpha + tbeta * tbeta; }

  bool finite() const {
    return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(talpha) &&
           std::isfinite(tbeta);
  }

  bool operator==(const StateVec&) const = default;
};

inline StateVec state_of(const Vec& mu, const Vec& nu, const GroundTruth& gt) {
  StateVec s;
  s.alpha = mu.dot(gt.mu_star);
  s.beta = (mu - s.alpha * gt.mu_star).norm();
  s.talpha = nu.dot(gt.nu_star);
  s.tbeta = (nu - s.talpha * gt.nu_star).norm();
  return s;
}

inline double err_of(const StateVec& s) {
  const double c = s.alpha * s.talpha - 1.0;
  return c * c + s.beta * s.beta + s.tbeta * s.tbeta;
}

// ||mu nu^T - mu_star nu_star^T||_F^2 via the rank-one expansion.
inline double frob_err(const Vec& mu, const Vec& nu, const GroundTruth& gt) {
  const double v = mu.squaredNorm() * nu.squaredNorm() -
                   2.0 * mu.dot(gt.mu_star) * nu.dot(gt.nu_star) + 1.0;
  return std::max(0.0, v);
}

// Same quantity from the state alone: (a ta - 1)^2 + a^2 tb^2 + ta^2 b^2 + b^2 tb^2.
inline double frob_err(const StateVec& s) {
  const double c = s.alpha * s.talpha - 1.0;
  const double b2 = s.beta * s.beta, tb2 = s.tbeta * s.tbeta;
  return c * c + s.alpha * s.alpha * tb2 + s.talpha * s.talpha * b2 + b2 * tb2;
}

enum class SandwichStatus { kHolds, kViolated, kNotApplicable };

struct SandwichResult {
  SandwichStatus status = SandwichStatus::kNotApplicable;
  std::optional<double> ratio;  // err / frob, absent when frob == 0
};

/// Checks frob/5 <= Err <= 12.5 frob, valid for beta, tbeta <= 0.1 and lengths in [0.3, 1.7].
inline SandwichResult sandwich_check(const StateVec& s, double frob) {
  SandwichResult r;
  const double L = s.L(), Lt = s.Lt();
  const bool applicable = s.beta <= 0.1 && s.tbeta <= 0.1 && L >= 0.3 && L <= 1.7 &&
                          Lt >= 0.3 && Lt <= 1.7;
  if (!applicable) return r;
  const double err = err_of(s);
  // Relative slack for rounding in the two evaluations.
  const double slack = 1e-12 * (1.0 + err + frob);
  const bool ok = frob / 5.0 <= err + slack && err <= 12.5 * frob + slack;
  r.status = ok ? SandwichStatus::kHolds : SandwichStatus::kViolated;
  if (frob > 0.0) r.ratio = err / frob;
  return r;
}

}  // namespace proxlin
