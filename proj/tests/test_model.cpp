#include <cmath>

#include <gtest/gtest.h>

#include "proxlin/model.hpp"
#include "proxlin/state.hpp"

using namespace proxlin;

TEST(GroundTruth, UnitNormInSmallAndLargeDimensions) {
  for (long d : {2L, 200L}) {
    const auto gt = generate_ground_truth(d, 7);
    EXPECT_NEAR(gt.mu_star.norm(), 1.0, 1e-12);
    EXPECT_NEAR(gt.nu_star.norm(), 1.0, 1e-12);
    EXPECT_EQ(gt.dim(), d);
  }
}

TEST(GroundTruth, SeededDeterminism) {
  const auto a = generate_ground_truth(200, 1);
  const auto b = generate_ground_truth(200, 1);
  EXPECT_EQ(a.mu_star, b.mu_star);
  EXPECT_EQ(a.nu_star, b.nu_star);
}

TEST(GroundTruth, IndependentSeedsGiveNearOrthogonalDirections) {
  const long d = 200;
  double mean_abs = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto a = generate_ground_truth(d, Seed(2 * k + 1));
    const auto b = generate_ground_truth(d, Seed(2 * k + 2));
    mean_abs += std::abs(a.mu_star.dot(b.mu_star)) / 100.0;
  }
  EXPECT_LT(mean_abs, 3.0 / std::sqrt(double(d)));
}

TEST(GroundTruth, RejectsDimensionBelowTwo) {
  try {
    generate_ground_truth(1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidDimension);
  }
}

TEST(SampleBatch, NoiselessResponsesAreExactProducts) {
  const auto gt = generate_ground_truth(50, 3);
  const ProblemParams p{50, 20, 0.0, LambdaSchedule::constant(1.0)};
  const auto b = sample_batch(gt, p, 11);
  const Vec exact = (b.X * gt.mu_star).cwiseProduct(b.Z * gt.nu_star);
  EXPECT_EQ((b.y - exact).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(b.X.rows(), 20);
  EXPECT_EQ(b.X.cols(), 50);
}

TEST(SampleBatch, NoiseVarianceMatchesSigmaSquared) {
  const long d = 200, m = 32;
  const auto gt = generate_ground_truth(d, 3);
  const ProblemParams p{d, m, 0.01, LambdaSchedule::constant(1.0)};
  double sum = 0.0, sum2 = 0.0;
  long n = 0;
  for (Seed s = 0; n < 10000; ++s) {
    const auto b = sample_batch(gt, p, s);
    for (Eigen::Index i = 0; i < b.eps.size() && n < 10000; ++i, ++n) {
      sum += b.eps[i];
      sum2 += b.eps[i] * b.eps[i];
    }
  }
  const double var = (sum2 - sum * sum / n) / (n - 1);
  EXPECT_NEAR(var, 1e-4, 1e-5);
}

TEST(SampleBatch, FixedSeedIsReproducible) {
  const auto gt = generate_ground_truth(30, 3);
  const ProblemParams p{30, 5, 0.5, LambdaSchedule::constant(1.0)};
  const auto a = sample_batch(gt, p, 99), b = sample_batch(gt, p, 99), c = sample_batch(gt, p, 100);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.Z, b.Z);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.X, c.X);
}

TEST(SampleBatch, ValidatesParameters) {
  const auto gt = generate_ground_truth(10, 3);
  EXPECT_THROW(sample_batch(gt, {10, 11, 0.0, LambdaSchedule::constant(1.0)}, 0), Error);
  EXPECT_THROW(sample_batch(gt, {10, 0, 0.0, LambdaSchedule::constant(1.0)}, 0), Error);
  EXPECT_THROW(sample_batch(gt, {10, 2, -1.0, LambdaSchedule::constant(1.0)}, 0), Error);
  EXPECT_THROW(sample_batch(gt, {10, 2, 0.0, LambdaSchedule::constant(-1.0)}, 0), Error);
  EXPECT_THROW(sample_batch(gt, {12, 2, 0.0, LambdaSchedule::constant(1.0)}, 0), Error);
}

TEST(InitIterates, OverlapModeHitsTargets) {
  const auto gt = generate_ground_truth(200, 5);
  const auto [mu0, nu0] = init_iterates(gt, InitSpec::overlap(0.99), 17);
  const auto s = state_of(mu0, nu0, gt);
  const double beta0 = std::sqrt(1.0 - 0.99 * 0.99);
  EXPECT_NEAR(s.alpha, 0.99, 1e-10);
  EXPECT_NEAR(s.talpha, 0.99, 1e-10);
  EXPECT_NEAR(s.beta, beta0, 1e-10);
  EXPECT_NEAR(s.tbeta, beta0, 1e-10);
  EXPECT_NEAR(mu0.norm(), 1.0, 1e-10);
}

TEST(InitIterates, DistanceModeSolvesForOverlap) {
  const auto gt = generate_ground_truth(200, 5);
  const auto spec = InitSpec::distance(0.02);
  const auto [alpha, beta] = spec.targets();
  EXPECT_NEAR(alpha, 0.99, 1e-15);
  EXPECT_NEAR(beta, std::sqrt(1.0 - 0.99 * 0.99), 1e-12);
  const auto [mu0, nu0] = init_iterates(gt, spec, 4);
  EXPECT_NEAR((mu0 - gt.mu_star).squaredNorm(), 0.02, 1e-10);
  EXPECT_NEAR((nu0 - gt.nu_star).squaredNorm(), 0.02, 1e-10);
}

TEST(InitIterates, PerfectOverlapReturnsGroundTruth) {
  const auto gt = generate_ground_truth(40, 5);
  const auto [mu0, nu0] = init_iterates(gt, InitSpec::overlap(1.0), 4);
  EXPECT_LT((mu0 - gt.mu_star).norm(), 1e-15);
  EXPECT_LT((nu0 - gt.nu_star).norm(), 1e-15);
}

TEST(InitIterates, NonUnitNormTargets) {
  const auto gt = generate_ground_truth(40, 5);
  const auto [mu0, nu0] = init_iterates(gt, InitSpec::overlap(0.5, 2.0), 4);
  const auto s = state_of(mu0, nu0, gt);
  EXPECT_NEAR(s.alpha, 0.5, 1e-10);
  EXPECT_NEAR(s.L(), 2.0, 1e-10);
}

TEST(InitIterates, InfeasibleSpecsAreRejected) {
  const auto gt = generate_ground_truth(40, 5);
  for (const auto& spec : {InitSpec::overlap(1.2), InitSpec::distance(5.0), InitSpec::overlap(0.5, 0.0)}) {
    try {
      init_iterates(gt, spec, 0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInfeasibleInit);
    }
  }
}

TEST(InitIterates, OrthogonalDirectionsDifferAcrossSeeds) {
  const auto gt = generate_ground_truth(100, 5);
  const auto a = init_iterates(gt, InitSpec::overlap(0.9), 1);
  const auto b = init_iterates(gt, InitSpec::overlap(0.9), 2);
  EXPECT_GT((a.first - b.first).norm(), 1e-3);
}
