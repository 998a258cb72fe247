#pragma once

// Expectations E[f(G1^2, G2^2)] for independent G1 ~ N(0, L^2), G2 ~ N(0, Lt^2).
//
// Two deterministic routes are provided:
//   * gauss_expect2: tensor-product Gauss-Hermite for an arbitrary integrand.
//   * moment_table (polar): the specific rational family
//       E[g1^i g2^j / D^p],  D = r1 r2 + r1 g1 + r2 g2,  p in {1, 2},
//     written as G1 = L rho cos(t), G2 = Lt rho sin(t). The radial integral over
//     u = rho^2 / 2 ~ Exp(1) is done in closed form (scaled exponential integral) when
//     the pole at u = -a is close to the origin and by Gauss-Laguerre otherwise; the
//     angular integral is a midpoint rule, which is spectrally accurate for the
//     smooth periodic angular profile. The tensor rule degrades to algebraic
//     convergence once r1, r2 are O(1) or smaller, the polar route does not.
// mc_expect2 is a plain Monte-Carlo oracle for validating both.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "proxlin/error.hpp"
#include "proxlin/rng.hpp"

namespace proxlin {

struct QuadratureNode {
  double x = 0.0;
  double w = 0.0;
};

/// Gauss rule for a probability weight (weights sum to one).
struct QuadratureRule {
  int nodes_per_dim = 0;
  std::vector<QuadratureNode> nodes;
  // Gauss-Hermite only: nonnegative half of a symmetric rule, weights doubled
  // (the zero node, when present, keeps its weight).
  std::vector<QuadratureNode> folded;
};

inline constexpr int kDefaultNodes = 64;

namespace detail {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are squared first
// eigenvector components times the total mass (here 1).
inline std::vector<QuadratureNode> golub_welsch(const Eigen::VectorXd& diag,
                                                const Eigen::VectorXd& offdiag) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  require(es.info() == Eigen::Success, ErrorKind::kNonConvergence,
          "Golub-Welsch eigenvalue solve failed");
  std::vector<QuadratureNode> out(static_cast<std::size_t>(diag.size()));
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double v0 = es.eigenvectors()(0, i);
    out[static_cast<std::size_t>(i)] = {es.eigenvalues()[i], v0 * v0};
  }
  return out;
}

inline QuadratureRule build_hermite(int n) {
  require(n >= 1, ErrorKind::kInvalidArgument, "quadrature needs at least one node");
  // Probabilists' Hermite: x He_k = He_{k+1} + k He_{k-1}.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  auto raw = golub_welsch(diag, off);

  QuadratureRule rule;
  rule.nodes_per_dim = n;
  rule.nodes.resize(raw.size());
  // Enforce exact mirror symmetry so the folded and unfolded rules agree bitwise in
  // exact arithmetic.
  for (int i = 0; i < n; ++i) {
    const auto& a = raw[static_cast<std::size_t>(i)];
    const auto& b = raw[static_cast<std::size_t>(n - 1 - i)];
    rule.nodes[static_cast<std::size_t>(i)] = {0.5 * (a.x - b.x), 0.5 * (a.w + b.w)};
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)].x = 0.0;
  double total = 0.0;
  for (const auto& nd : rule.nodes) total += nd.w;
  for (auto& nd : rule.nodes) nd.w /= total;

  for (int i = n / 2; i < n; ++i) {
    const auto& nd = rule.nodes[static_cast<std::size_t>(i)];
    const bool centre = (n % 2 == 1) && i == n / 2;
    rule.folded.push_back({nd.x, centre ? nd.w : 2.0 * nd.w});
  }
  return rule;
}

inline QuadratureRule build_laguerre(int n) {
  require(n >= 1, ErrorKind::kInvalidArgument, "quadrature needs at least one node");
  // Monic Laguerre: alpha_k = 2k + 1, beta_k = k^2.
  Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + 1.0;
  for (int k = 1; k < n; ++k) off[k - 1] = static_cast<double>(k);
  QuadratureRule rule;
  rule.nodes_per_dim = n;
  rule.nodes = golub_welsch(diag, off);
  double total = 0.0;
  for (const auto& nd : rule.nodes) total += nd.w;
  for (auto& nd : rule.nodes) nd.w /= total;
  return rule;
}

template <typename Build>
const QuadratureRule& cached_rule(int n, Build build, std::map<int, std::unique_ptr<QuadratureRule>>& cache,
                                  std::mutex& mu) {
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(build(n));
  return *slot;
}

}  // namespace detail

/// Gauss-Hermite rule for the standard normal weight, built once per node count.
inline const QuadratureRule& hermite_rule(int n = kDefaultNodes) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mu;
  return detail::cached_rule(n, detail::build_hermite, cache, mu);
}

/// Gauss-Laguerre rule for the Exp(1) weight.
inline const QuadratureRule& laguerre_rule(int n = kDefaultNodes) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mu;
  return detail::cached_rule(n, detail::build_laguerre, cache, mu);
}

/// Tensor Gauss-Hermite evaluation of E[f(G1^2, G2^2)].
/// Only squares enter, so by default the rule is folded onto the half-line.
template <typename F>
double gauss_expect2(F&& f, double L, double Lt, const QuadratureRule& rule, bool fold = true) {
  require(L > 0.0 && Lt > 0.0 && std::isfinite(L) && std::isfinite(Lt),
          ErrorKind::kInvalidArgument, "gauss_expect2: scales must be positive");
  const auto& nodes = fold ? rule.folded : rule.nodes;
  require(!nodes.empty(), ErrorKind::kInvalidArgument, "gauss_expect2: empty rule");
  double total = 0.0;
  for (const auto& a : nodes) {
    const double g1 = (L * a.x) * (L * a.x);
    double inner = 0.0;
    for (const auto& b : nodes) {
      const double g2 = (Lt * b.x) * (Lt * b.x);
      const double v = f(g1, g2);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os.precision(17);
        os << "integrand is non-finite at node (g1sq=" << g1 << ", g2sq=" << g2 << ")";
        throw Error(ErrorKind::kIntegrationDomain, os.str());
      }
      inner += b.w * v;
    }
    total += a.w * inner;
  }
  return total;
}

template <typename F>
double gauss_expect2(F&& f, double L, double Lt, int nodes_per_dim = kDefaultNodes) {
  return gauss_expect2(std::forward<F>(f), L, Lt, hermite_rule(nodes_per_dim));
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Plain Monte-Carlo mean and standard error of f(G1^2, G2^2).
template <typename F>
McEstimate mc_expect2(F&& f, double L, double Lt, std::size_t n_samples, Seed seed) {
  require(n_samples >= 1, ErrorKind::kInvalidArgument, "mc_expect2 needs samples");
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double a = L * rng.normal(), b = Lt * rng.normal();
    const double v = f(a * a, b * b);
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  McEstimate out;
  out.estimate = mean;
  out.std_error = n_samples > 1
                    ? std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples))
                    : 0.0;
  return out;
}

/// Vector-valued variant sharing one sample stream across N integrands.
template <std::size_t N, typename F>
std::array<McEstimate, N> mc_expect2_many(F&& f, double L, double Lt, std::size_t n_samples,
                                          Seed seed) {
  require(n_samples >= 2, ErrorKind::kInvalidArgument, "mc_expect2_many needs samples");
  Rng rng(seed);
  std::array<double, N> mean{}, m2{};
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double a = L * rng.normal(), b = Lt * rng.normal();
    const std::array<double, N> v = f(a * a, b * b);
    for (std::size_t i = 0; i < N; ++i) {
      const double delta = v[i] - mean[i];
      mean[i] += delta / static_cast<double>(k + 1);
      m2[i] += delta * (v[i] - mean[i]);
    }
  }
  std::array<McEstimate, N> out;
  const double n = static_cast<double>(n_samples);
  for (std::size_t i = 0; i < N; ++i) out[i] = {mean[i], std::sqrt(m2[i] / (n - 1.0) / n)};
  return out;
}

// ---------------------------------------------------------------------------
// Rational moment family used by the predictor.

enum class ExpectationMethod { kPolar, kTensorHermite };

/// All expectations entering one application of the deterministic map. With
/// D = r1 r2 + r1 g1 + r2 g2 (g1 = G1^2, g2 = G2^2):
struct MomentTable {
  double V = 0.0;   // E[r1 r2 g1 g2 / D]
  double V1 = 0.0;  // E[r1 r2 g2 / D]
  double V2 = 0.0;  // E[r1 r2 g1 / D]
  double r2sq_g2 = 0.0;        // E[r2^2 g2 / D^2]
  double r2sq_g1_g2sq = 0.0;   // E[r2^2 g1 g2^2 / D^2]
  double r2sq_g2sq = 0.0;      // E[r2^2 g2^2 / D^2]
  double r2sq_g1_g2 = 0.0;     // E[r2^2 g1 g2 / D^2]
  double r1sq_g1 = 0.0;        // E[r1^2 g1 / D^2]
  double r1sq_g1sq_g2 = 0.0;   // E[r1^2 g1^2 g2 / D^2]
  double r1sq_g1sq = 0.0;      // E[r1^2 g1^2 / D^2]
  double r1sq_g1_g2 = 0.0;     // E[r1^2 g1 g2 / D^2]
};

namespace detail {

// Switch point between the closed form and Gauss-Laguerre for the radial moments.
inline constexpr double kRadialSwitch = 4.0;

// E[u^k / (a + u)^p], u ~ Exp(1), for (k, p) in {(1,1), (2,1), (1,2), (2,2), (3,2)}.
struct RadialMoments {
  double k1p1 = 0.0, k2p1 = 0.0, k1p2 = 0.0, k2p2 = 0.0, k3p2 = 0.0;
};

inline RadialMoments radial_closed_form(double a) {
  // R(a) = E[1/(a+u)] = e^a E1(a); the rest follows by polynomial division and
  // J(k,2) = -dJ(k,1)/da with R' = R - 1/a.
  const double R = -std::exp(a) * std::expint(-a);
  RadialMoments J;
  J.k1p1 = 1.0 - a * R;
  J.k2p1 = 1.0 - a + a * a * R;
  J.k1p2 = (1.0 + a) * R - 1.0;
  J.k2p2 = 1.0 + a - (2.0 * a + a * a) * R;
  J.k3p2 = 1.0 - 2.0 * a - a * a + (3.0 * a * a + a * a * a) * R;
  return J;
}

inline RadialMoments radial_laguerre(double a, const QuadratureRule& lag) {
  RadialMoments J;
  for (const auto& nd : lag.nodes) {
    const double u = nd.x, inv = 1.0 / (a + u);
    const double q1 = u * inv, q2 = q1 * q1;
    J.k1p1 += nd.w * q1;
    J.k2p1 += nd.w * q1 * u;
    J.k1p2 += nd.w * q1 * inv;
    J.k2p2 += nd.w * q2;
    J.k3p2 += nd.w * q2 * u;
  }
  return J;
}

inline RadialMoments radial_moments(double a, const QuadratureRule& lag) {
  return a < kRadialSwitch ? radial_closed_form(a) : radial_laguerre(a, lag);
}

inline double radial_k1p1(double a, const QuadratureRule& lag) {
  if (a < kRadialSwitch) return 1.0 + a * std::exp(a) * std::expint(-a);
  double s = 0.0;
  for (const auto& nd : lag.nodes) s += nd.w * nd.x / (a + nd.x);
  return s;
}

struct PolarSetup {
  double e1, e2, Q, a, w;
};

template <typename Visit>
void for_each_angle(double L, double Lt, double r1, double r2, int n, Visit&& visit) {
  const double L2 = L * L, Lt2 = Lt * Lt;
  const double quarter = 0.25 * 2.0 * M_PI;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) * quarter / n;
    const double c = std::cos(t), s = std::sin(t);
    const double c2 = c * c, s2 = s * s;
    PolarSetup p;
    p.e1 = 2.0 * L2 * c2;
    p.e2 = 2.0 * Lt2 * s2;
    p.Q = r1 * p.e1 + r2 * p.e2;
    p.a = r1 * r2 / p.Q;
    p.w = 1.0 / n;
    visit(p);
  }
}

inline void validate_moment_args(double L, double Lt, double r1, double r2) {
  require(std::isfinite(L) && std::isfinite(Lt) && L > 0.0 && Lt > 0.0,
          ErrorKind::kInvalidArgument, "moments: L and Lt must be positive");
  require(std::isfinite(r1) && std::isfinite(r2) && r1 > 0.0 && r2 > 0.0,
          ErrorKind::kInvalidArgument, "moments: r1 and r2 must be positive");
}

}  // namespace detail

/// (V1, V2) only; the fixed-point iteration for (r1, r2) needs nothing else.
inline std::array<double, 2> fixed_point_moments(double L, double Lt, double r1, double r2,
                                                 ExpectationMethod method = ExpectationMethod::kPolar,
                                                 int nodes = kDefaultNodes) {
  detail::validate_moment_args(L, Lt, r1, r2);
  const double rr = r1 * r2;
  if (method == ExpectationMethod::kTensorHermite) {
    const auto& rule = hermite_rule(nodes);
    const double v1 = gauss_expect2(
        [&](double g1, double g2) { return rr * g2 / (rr + r1 * g1 + r2 * g2); }, L, Lt, rule);
    const double v2 = gauss_expect2(
        [&](double g1, double g2) { return rr * g1 / (rr + r1 * g1 + r2 * g2); }, L, Lt, rule);
    return {v1, v2};
  }
  const auto& lag = laguerre_rule(nodes);
  double v1 = 0.0, v2 = 0.0;
  detail::for_each_angle(L, Lt, r1, r2, nodes, [&](const detail::PolarSetup& p) {
    const double j = detail::radial_k1p1(p.a, lag) / p.Q;
    v1 += p.w * p.e2 * j;
    v2 += p.w * p.e1 * j;
  });
  return {rr * v1, rr * v2};
}

inline MomentTable moment_table(double L, double Lt, double r1, double r2,
                                ExpectationMethod method = ExpectationMethod::kPolar,
                                int nodes = kDefaultNodes) {
  detail::validate_moment_args(L, Lt, r1, r2);
  MomentTable mt;
  const double rr = r1 * r2, r1s = r1 * r1, r2s = r2 * r2;
  if (method == ExpectationMethod::kTensorHermite) {
    const auto& rule = hermite_rule(nodes);
    auto E = [&](auto f) { return gauss_expect2(f, L, Lt, rule); };
    auto D = [&](double g1, double g2) { return rr + r1 * g1 + r2 * g2; };
    mt.V = E([&](double g1, double g2) { return rr * g1 * g2 / D(g1, g2); });
    mt.V1 = E([&](double g1, double g2) { return rr * g2 / D(g1, g2); });
    mt.V2 = E([&](double g1, double g2) { return rr * g1 / D(g1, g2); });
    auto D2 = [&](double g1, double g2) { const double v = D(g1, g2); return v * v; };
    mt.r2sq_g2 = E([&](double g1, double g2) { return r2s * g2 / D2(g1, g2); });
    mt.r2sq_g1_g2sq = E([&](double g1, double g2) { return r2s * g1 * g2 * g2 / D2(g1, g2); });
    mt.r2sq_g2sq = E([&](double g1, double g2) { return r2s * g2 * g2 / D2(g1, g2); });
    mt.r2sq_g1_g2 = E([&](double g1, double g2) { return r2s * g1 * g2 / D2(g1, g2); });
    mt.r1sq_g1 = E([&](double g1, double g2) { return r1s * g1 / D2(g1, g2); });
    mt.r1sq_g1sq_g2 = E([&](double g1, double g2) { return r1s * g1 * g1 * g2 / D2(g1, g2); });
    mt.r1sq_g1sq = E([&](double g1, double g2) { return r1s * g1 * g1 / D2(g1, g2); });
    mt.r1sq_g1_g2 = E([&](double g1, double g2) { return r1s * g1 * g2 / D2(g1, g2); });
    return mt;
  }

  const auto& lag = laguerre_rule(nodes);
  // E[g1^i g2^j / D^p] = mean over angles of e1^i e2^j Q^-p J(i+j, p, a).
  double m110 = 0, m011 = 0, m101 = 0;                          // p = 1: g1g2, g2, g1
  double m012 = 0, m122 = 0, m022 = 0, m112 = 0, m102 = 0, m212 = 0, m202 = 0;  // p = 2
  detail::for_each_angle(L, Lt, r1, r2, nodes, [&](const detail::PolarSetup& p) {
    const auto J = detail::radial_moments(p.a, lag);
    const double q1 = p.w / p.Q, q2 = q1 / p.Q;
    const double e1 = p.e1, e2 = p.e2;
    m110 += q1 * e1 * e2 * J.k2p1;
    m011 += q1 * e2 * J.k1p1;
    m101 += q1 * e1 * J.k1p1;
    m012 += q2 * e2 * J.k1p2;
    m102 += q2 * e1 * J.k1p2;
    m122 += q2 * e1 * e2 * e2 * J.k3p2;
    m212 += q2 * e1 * e1 * e2 * J.k3p2;
    m022 += q2 * e2 * e2 * J.k2p2;
    m202 += q2 * e1 * e1 * J.k2p2;
    m112 += q2 * e1 * e2 * J.k2p2;
  });
  mt.V = rr * m110;
  mt.V1 = rr * m011;
  mt.V2 = rr * m101;
  mt.r2sq_g2 = r2s * m012;
  mt.r2sq_g1_g2sq = r2s * m122;
  mt.r2sq_g2sq = r2s * m022;
  mt.r2sq_g1_g2 = r2s * m112;
  mt.r1sq_g1 = r1s * m102;
  mt.r1sq_g1sq_g2 = r1s * m212;
  mt.r1sq_g1sq = r1s * m202;
  mt.r1sq_g1_g2 = r1s * m112;
  return mt;
}

}  // namespace proxlin
