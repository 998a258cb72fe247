#pragma once

// Deterministic state-evolution predictor: (r1, r2) fixed point, the V-quantities,
// the (eta^2, teta^2) linear solve and the four-dimensional map T.

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "proxlin/error.hpp"
#include "proxlin/expect.hpp"
#include "proxlin/schedule.hpp"
#include "proxlin/state.hpp"

namespace proxlin {

// Denominator of the third V4 term: L^4 Lt^2 (mirror of the V3 term) or L^3 Lt^2.
enum class V4Denominator { kSymmetric, kAsPrinted };

// beta' = (H^2 + eta^2)^(1/2), or the reciprocal square root variant.
enum class BetaExponent { kSqrt, kInverseSqrt };

struct PredictOptions {
  int nodes = kDefaultNodes;
  ExpectationMethod method = ExpectationMethod::kPolar;
  V4Denominator v4_denominator = V4Denominator::kSymmetric;
  BetaExponent beta_exponent = BetaExponent::kSqrt;
  double r_tol = 1e-12;
  int r_max_iter = 1000;

  bool operator==(const PredictOptions&) const = default;
};

inline constexpr double kEtaDetMin = 1e-10;

struct FixedPointR {
  double r1 = 0.0;
  double r2 = 0.0;
  int iterations_used = 0;
  double residual = 0.0;
  bool contractive = false;  // inside the region where the map is a certified contraction
};

struct VQuantities {
  double V = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
};

struct EtaSolution {
  double eta_sq = 0.0;
  double teta_sq = 0.0;
  double a1 = 1.0, a2 = 0.0, a3 = 0.0, a4 = 1.0;
  double det = 1.0;
};

struct DetQuantities {
  FixedPointR r;
  double V = 0.0, V1 = 0.0, V2 = 0.0, V3 = 0.0, V4 = 0.0;
  double eta_sq = 0.0, teta_sq = 0.0;
  EtaSolution eta;
  MomentTable moments;
};

/// Sufficient condition for the (r1, r2) map to contract with Lipschitz constant < 1/2.
inline bool in_theory_region(double L, double Lt, double lambda, double Lambda) {
  const double L2 = L * L, Lt2 = Lt * Lt;
  const double bound = (3.0 * Lt2 * Lt2 + 2.0 * L2 * Lt2 + 3.0 * L2 * L2) / (lambda * lambda * Lambda);
  return bound < 0.5;
}

inline bool in_theory_region(const StateVec& s, long d, long m, double lambda) {
  return in_theory_region(s.L(), s.Lt(), lambda, double(m) / double(d));
}

/// Solves r1 = Lambda (lambda + E[r1 r2 G2^2 / D]), r2 = Lambda (lambda + E[r1 r2 G1^2 / D]).
inline FixedPointR solve_r(double L, double Lt, double lambda, double Lambda,
                           const PredictOptions& opt = {}) {
  require(std::isfinite(L) && std::isfinite(Lt) && L > 0.0 && Lt > 0.0,
          ErrorKind::kInvalidArgument, "solve_r: L and Lt must be positive");
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::kInvalidArgument,
          "solve_r: lambda must be positive");
  require(std::isfinite(Lambda) && Lambda > 0.0 && Lambda <= 1.0, ErrorKind::kInvalidArgument,
          "solve_r: Lambda = m/d must lie in (0, 1]");
  require(opt.r_tol > 0.0 && opt.r_max_iter >= 1, ErrorKind::kInvalidArgument,
          "solve_r: bad tolerance or iteration cap");

  FixedPointR out;
  out.contractive = in_theory_region(L, Lt, lambda, Lambda);
  double r1 = 1.5 * lambda * Lambda, r2 = r1;
  double omega = 1.0, last_step = INFINITY;
  for (int it = 1; it <= opt.r_max_iter; ++it) {
    const auto v = fixed_point_moments(L, Lt, r1, r2, opt.method, opt.nodes);
    const double g1 = Lambda * (lambda + v[0]);
    const double g2 = Lambda * (lambda + v[1]);
    const double defect = std::max(std::abs(g1 - r1) / g1, std::abs(g2 - r2) / g2);
    // Damp only when plain iteration stops making progress.
    if (defect > last_step) omega = std::max(omega * 0.5, 1.0 / 64.0);
    last_step = defect;
    r1 += omega * (g1 - r1);
    r2 += omega * (g2 - r2);
    out.iterations_used = it;
    out.residual = defect;
    if (defect <= opt.r_tol) {
      // Land exactly on the image so the self-consistency identity holds to tol.
      out.r1 = g1;
      out.r2 = g2;
      return out;
    }
  }
  throw Error(ErrorKind::kNonConvergence,
              "solve_r: no convergence after " + std::to_string(opt.r_max_iter) +
                  " iterations (residual " + std::to_string(out.residual) + ")");
}

inline VQuantities compute_V(const FixedPointR& r, double L, double Lt, const PredictOptions& opt = {}) {
  const MomentTable mt = moment_table(L, Lt, r.r1, r.r2, opt.method, opt.nodes);
  return {mt.V, mt.V1, mt.V2};
}

inline VQuantities v_of(const MomentTable& mt) { return {mt.V, mt.V1, mt.V2}; }

namespace detail {
inline void require_lengths(const StateVec& s) {
  require(s.finite(), ErrorKind::kNumericalInput, "state is not finite");
  require(s.L_sq() > 0.0 && s.Lt_sq() > 0.0, ErrorKind::kInvalidArgument,
          "state lengths L and Lt must be positive");
}

struct Shared {
  double c1, c2;
};

inline Shared shared_coeffs(const StateVec& s, const VQuantities& v, double lambda) {
  const double L2 = s.L_sq(), Lt2 = s.Lt_sq();
  const double at = s.alpha * s.talpha;
  const double den = v.V * (L2 + Lt2) + lambda * L2 * Lt2;
  return {(v.V * (at / L2 + L2) + lambda * L2 * Lt2) / den,
          (v.V * (at / Lt2 + Lt2) + lambda * L2 * Lt2) / den};
}
}  // namespace detail

/// Predicted parallel components (F, Ft).
inline std::pair<double, double> compute_parallel(const StateVec& s, const VQuantities& v,
                                                  double lambda) {
  detail::require_lengths(s);
  const double L2 = s.L_sq(), Lt2 = s.Lt_sq();
  const auto c = detail::shared_coeffs(s, v, lambda);
  const double F = c.c1 * s.alpha + v.V1 * s.beta * s.beta / (L2 * Lt2 * (v.V1 + lambda)) * s.talpha;
  const double Ft = c.c2 * s.talpha + v.V2 * s.tbeta * s.tbeta / (L2 * Lt2 * (v.V2 + lambda)) * s.alpha;
  return {F, Ft};
}

/// Predicted in-span orthogonal components (H, Ht).
inline std::pair<double, double> compute_H(const StateVec& s, const VQuantities& v, double lambda) {
  detail::require_lengths(s);
  const double L2 = s.L_sq(), Lt2 = s.Lt_sq();
  const auto c = detail::shared_coeffs(s, v, lambda);
  const double q = s.alpha * s.talpha / (L2 * Lt2);
  const double H = c.c1 * s.beta - q * v.V1 / (v.V1 + lambda) * s.beta;
  const double Ht = c.c2 * s.tbeta - q * v.V2 / (v.V2 + lambda) * s.tbeta;
  return {H, Ht};
}

inline std::pair<double, double> compute_V34(const StateVec& s, double sigma, double lambda,
                                             const MomentTable& mt,
                                             V4Denominator v4 = V4Denominator::kSymmetric) {
  detail::require_lengths(s);
  const double L2 = s.L_sq(), Lt2 = s.Lt_sq();
  const double a = s.alpha, b = s.beta, ta = s.talpha, tb = s.tbeta;
  const double A = sigma * sigma + b * b * tb * tb / (L2 * Lt2);
  const double dev = a * ta / (L2 * Lt2) - 1.0;
  const double Bden = lambda + mt.V * (1.0 / L2 + 1.0 / Lt2);
  const double B = lambda * lambda * dev * dev / (Bden * Bden);
  const double p1 = lambda + mt.V1, p2 = lambda + mt.V2;
  const double tab = lambda * ta * b, atb = lambda * a * tb;

  const double V3 = A * mt.r2sq_g2 + B * mt.r2sq_g1_g2sq +
                    tab * tab / (p1 * p1 * Lt2 * Lt2 * L2) * mt.r2sq_g2sq +
                    atb * atb / (p2 * p2 * L2 * L2 * Lt2) * mt.r2sq_g1_g2;
  const double Lfac = v4 == V4Denominator::kSymmetric ? L2 * L2 : L2 * std::sqrt(L2);
  const double V4 = A * mt.r1sq_g1 + B * mt.r1sq_g1sq_g2 +
                    atb * atb / (p2 * p2 * Lt2 * Lfac) * mt.r1sq_g1sq +
                    tab * tab / (p1 * p1 * L2 * Lt2 * Lt2) * mt.r1sq_g1_g2;
  return {V3, V4};
}

/// Solves the 2x2 linear system
///   eta^2  = k (V3 + E[r2^2 G2^4/D^2] eta^2 + E[r2^2 G1^2 G2^2/D^2] teta^2)
///   teta^2 = k (V4 + E[r1^2 G1^2 G2^2/D^2] eta^2 + E[r1^2 G1^4/D^2] teta^2)
/// with k = (d - 2) m / d^2.
inline EtaSolution solve_eta(long d, long m, const MomentTable& mt, double V3, double V4) {
  require(d >= 2 && m >= 1 && m <= d, ErrorKind::kInvalidArgument, "solve_eta: need 1 <= m <= d, d >= 2");
  require(std::isfinite(V3) && std::isfinite(V4), ErrorKind::kNumericalInput,
          "solve_eta: non-finite right-hand side");
  const double k = double(d - 2) * double(m) / (double(d) * double(d));
  EtaSolution e;
  e.a1 = 1.0 - k * mt.r2sq_g2sq;
  e.a2 = -k * mt.r2sq_g1_g2;
  e.a3 = -k * mt.r1sq_g1_g2;
  e.a4 = 1.0 - k * mt.r1sq_g1sq;
  e.det = e.a1 * e.a4 - e.a2 * e.a3;
  if (!(e.det > kEtaDetMin))
    throw Error(ErrorKind::kIllConditionedEta,
                "eta system determinant " + std::to_string(e.det) + " is not above 1e-10");
  e.eta_sq = std::max(0.0, k * (e.a4 * V3 - e.a2 * V4) / e.det);
  e.teta_sq = std::max(0.0, k * (e.a1 * V4 - e.a3 * V3) / e.det);
  return e;
}

inline DetQuantities det_quantities(const StateVec& s, long d, long m, double sigma, double lambda,
                                    const PredictOptions& opt = {}) {
  detail::require_lengths(s);
  require(d >= 2 && m >= 1 && m <= d, ErrorKind::kInvalidArgument, "need 1 <= m <= d, d >= 2");
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorKind::kInvalidArgument, "sigma must be nonnegative");
  const double L = s.L(), Lt = s.Lt();
  DetQuantities q;
  q.r = solve_r(L, Lt, lambda, double(m) / double(d), opt);
  q.moments = moment_table(L, Lt, q.r.r1, q.r.r2, opt.method, opt.nodes);
  q.V = q.moments.V;
  q.V1 = q.moments.V1;
  q.V2 = q.moments.V2;
  std::tie(q.V3, q.V4) = compute_V34(s, sigma, lambda, q.moments, opt.v4_denominator);
  q.eta = solve_eta(d, m, q.moments, q.V3, q.V4);
  q.eta_sq = q.eta.eta_sq;
  q.teta_sq = q.eta.teta_sq;
  return q;
}

inline StateVec apply_map(const StateVec& s, const DetQuantities& q, double lambda,
                          BetaExponent ex = BetaExponent::kSqrt) {
  const VQuantities v{q.V, q.V1, q.V2};
  const auto [F, Ft] = compute_parallel(s, v, lambda);
  const auto [H, Ht] = compute_H(s, v, lambda);
  const double e = ex == BetaExponent::kSqrt ? 0.5 : -0.5;
  StateVec out;
  out.alpha = F;
  out.talpha = Ft;
  out.beta = std::pow(H * H + q.eta_sq, e);
  out.tbeta = std::pow(Ht * Ht + q.teta_sq, e);
  return out;
}

/// One application of the deterministic map.
inline StateVec det_map(const StateVec& s, long d, long m, double sigma, double lambda,
                        const PredictOptions& opt = {}) {
  return apply_map(s, det_quantities(s, d, m, sigma, lambda, opt), lambda, opt.beta_exponent);
}

struct DetTrajectory {
  std::vector<StateVec> states;
  std::vector<double> err_seq;
  std::vector<bool> theory_region;  // per record, evaluated with the lambda of that step
};

inline DetTrajectory predict_trajectory(const StateVec& s0, long T, long d, long m, double sigma,
                                        const LambdaSchedule& schedule, const PredictOptions& opt = {}) {
  require(T >= 0, ErrorKind::kInvalidArgument, "iteration count must be nonnegative");
  require(d >= 2 && m >= 1 && m <= d, ErrorKind::kInvalidArgument, "need 1 <= m <= d, d >= 2");
  schedule.validate();
  DetTrajectory tr;
  tr.states.reserve(std::size_t(T) + 1);
  tr.err_seq.reserve(std::size_t(T) + 1);
  tr.theory_region.reserve(std::size_t(T) + 1);
  StateVec s = s0;
  for (long t = 0;; ++t) {
    tr.states.push_back(s);
    tr.err_seq.push_back(err_of(s));
    const double lambda = schedule.value(t);
    tr.theory_region.push_back(s.L_sq() > 0 && s.Lt_sq() > 0 && in_theory_region(s, d, m, lambda));
    if (t == T) break;
    try {
      s = det_map(s, d, m, sigma, lambda, opt);
      require(s.finite(), ErrorKind::kNumericalInput, "predicted state became non-finite");
    } catch (const Error& e) {
      throw e.with_step(t);
    }
  }
  return tr;
}

inline std::string to_string(V4Denominator v) {
  return v == V4Denominator::kSymmetric ? "symmetric" : "as-printed";
}

inline std::string to_string(BetaExponent e) {
  return e == BetaExponent::kSqrt ? "sqrt" : "inverse-sqrt";
}

inline std::string to_string(ExpectationMethod m) {
  return m == ExpectationMethod::kPolar ? "polar" : "tensor";
}

}  // namespace proxlin
