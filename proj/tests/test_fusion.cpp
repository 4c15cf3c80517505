#include <gtest/gtest.h>

#include "ccs/ccs.hpp"
#include "oracles.hpp"

using namespace ccs;

namespace {

Mat random_pd(Index n, CounterRng& rng) {
  const Mat g = gaussian_matrix(n, n, rng);
  return g * g.transpose() + 0.5 * Mat::Identity(n, n);
}

Mat block_diag(const std::vector<Mat>& blocks) {
  Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Mat out = Mat::Zero(n, n);
  Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

/// (I^T G^-1 I)^-1 I^T G^-1 with I the stacked identities, by explicit inverses.
Mat direct_mle(const Mat& gamma, Index n, Index k) {
  Mat ibar(n * k, n);
  for (Index i = 0; i < k; ++i) ibar.middleRows(i * n, n).setIdentity();
  const Mat ginv = gamma.inverse();
  return (ibar.transpose() * ginv * ibar).inverse() * ibar.transpose() * ginv;
}

}  // namespace

TEST(OmegaFull, IdentityCovarianceAverages) {
  const FusionRule r = omega_full(NoiseCovariance(Mat::Identity(6, 6), 3, 2));
  for (Index i = 0; i < 2; ++i) EXPECT_LT((r.block(i, 3) - 0.5 * Mat::Identity(3, 3)).norm(), 1e-12);
}

TEST(OmegaFull, IndependentScalesClosedForm) {
  const Mat g = block_diag({Mat::Identity(2, 2), 4.0 * Mat::Identity(2, 2)});
  const FusionRule r = omega_full(NoiseCovariance(g, 2, 2));
  EXPECT_LT((r.block(0, 2) - 0.8 * Mat::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LT((r.block(1, 2) - 0.2 * Mat::Identity(2, 2)).norm(), 1e-12);
}

TEST(OmegaFull, MatchesDirectFormula) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CounterRng rng(seed);
    const Mat g = random_pd(4, rng);
    const FusionRule r = omega_full(NoiseCovariance(g, 2, 2));
    EXPECT_LT((r.stacked(2) - direct_mle(g, 2, 2)).norm(), 1e-10);
  }
}

TEST(OmegaFull, PartitionsIdentity) {
  CounterRng rng(3);
  const FusionRule r = omega_full(NoiseCovariance(random_pd(12, rng), 4, 3));
  Mat sum = Mat::Zero(4, 4);
  for (Index i = 0; i < 3; ++i) sum += r.block(i, 4);
  EXPECT_LT((sum - Mat::Identity(4, 4)).norm(), 1e-8);
}

TEST(OmegaFull, BeatsRandomPartitions) {
  CounterRng rng(4);
  const Index n = 3, k = 3;
  const NoiseCovariance cov(random_pd(n * k, rng), n, k);
  const double best = expected_error(omega_full(cov), cov);
  for (int t = 0; t < 100; ++t) {
    std::vector<Mat> blocks;
    Mat rest = Mat::Identity(n, n);
    for (Index i = 0; i + 1 < k; ++i) {
      blocks.push_back(gaussian_matrix(n, n, rng));
      rest -= blocks.back();
    }
    blocks.push_back(rest);
    EXPECT_LE(best, expected_error(FusionRule::full(blocks), cov) + 1e-9);
  }
}

TEST(OmegaIndependent, EqualBlocksAverage) {
  const FusionRule r = omega_independent({Mat::Identity(3, 3), Mat::Identity(3, 3), Mat::Identity(3, 3)});
  ASSERT_EQ(r.kind(), FusionRule::Kind::Scalar);
  for (double w : r.weights()) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
}

TEST(OmegaIndependent, ScalarWeightsFromScales) {
  const FusionRule r = omega_independent({Mat::Identity(2, 2), 4.0 * Mat::Identity(2, 2)});
  ASSERT_EQ(r.kind(), FusionRule::Kind::Scalar);
  EXPECT_NEAR(r.weights()[0], 0.8, 1e-15);
  EXPECT_NEAR(r.weights()[1], 0.2, 1e-15);
}

TEST(OmegaIndependent, DiagonalAgreesWithFull) {
  CounterRng rng(5);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  std::vector<Mat> blocks;
  for (int i = 0; i < 3; ++i) {
    Vec d(4);
    for (Index j = 0; j < 4; ++j) d(j) = u(rng);
    blocks.push_back(d.asDiagonal());
  }
  const FusionRule r = omega_independent(blocks);
  EXPECT_EQ(r.kind(), FusionRule::Kind::Diagonal);
  const FusionRule f = omega_full(NoiseCovariance(block_diag(blocks), 4, 3));
  EXPECT_LT((r.stacked(4) - f.stacked(4)).norm(), 1e-10);
}

TEST(OmegaIndependent, GeneralBlocksAgreeWithFull) {
  CounterRng rng(6);
  const std::vector<Mat> blocks{random_pd(3, rng), random_pd(3, rng)};
  const FusionRule r = omega_independent(blocks);
  EXPECT_EQ(r.kind(), FusionRule::Kind::Full);
  EXPECT_LT((r.stacked(3) - omega_full(NoiseCovariance(block_diag(blocks), 3, 2)).stacked(3)).norm(), 1e-10);
}

TEST(OmegaIndependent, DominatesEveryBranch) {
  CounterRng rng(7);
  for (int t = 0; t < 20; ++t) {
    const std::vector<Mat> blocks{random_pd(3, rng), random_pd(3, rng), random_pd(3, rng)};
    const NoiseCovariance cov(block_diag(blocks), 3, 3);
    const double e = expected_error(omega_independent(blocks), cov);
    double lo = blocks[0].trace();
    for (const auto& b : blocks) lo = std::min(lo, b.trace());
    EXPECT_LE(e, lo + 1e-9);
  }
}

TEST(Fuse, EqualEstimatesAreFixed) {
  CounterRng rng(8);
  const FusionRule r = omega_full(NoiseCovariance(random_pd(6, rng), 3, 2));
  const Vec x = gaussian_matrix(3, 1, rng).col(0);
  EXPECT_LT((fuse(r, std::vector<Vec>{x, x}) - x).norm(), 1e-12);
}

TEST(Fuse, ScalarExample) {
  const FusionRule r = FusionRule::scalar({0.8, 0.2});
  const Vec x = fuse(r, std::vector<Vec>{Vec::Unit(2, 0), Vec::Unit(2, 1)});
  EXPECT_DOUBLE_EQ(x(0), 0.8);
  EXPECT_DOUBLE_EQ(x(1), 0.2);
}

TEST(Fuse, MatchesStackedProductAndIsLinear) {
  CounterRng rng(9);
  const FusionRule r = omega_full(NoiseCovariance(random_pd(9, rng), 3, 3));
  std::vector<Vec> a, b, c;
  Vec stacked(9);
  for (Index i = 0; i < 3; ++i) {
    a.push_back(gaussian_matrix(3, 1, rng).col(0));
    b.push_back(gaussian_matrix(3, 1, rng).col(0));
    c.push_back(2.0 * a.back() - 3.0 * b.back());
    stacked.segment(3 * i, 3) = a.back();
  }
  EXPECT_LT((fuse(r, a) - r.stacked(3) * stacked).norm(), 1e-12);
  EXPECT_LT((fuse(r, c) - (2.0 * fuse(r, a) - 3.0 * fuse(r, b))).norm(), 1e-12);
}

TEST(Fuse, RejectsWrongCount) {
  EXPECT_THROW(fuse(FusionRule::average(3), std::vector<Vec>{Vec::Zero(2)}), DimensionError);
}

TEST(FusionRule, RejectsNonPartition) {
  EXPECT_THROW(FusionRule::scalar({0.5, 0.2}), NumericalError);
}

TEST(ExpectedError, ClosedForms) {
  const NoiseCovariance unit(Mat::Identity(40, 40), 20, 2);
  EXPECT_NEAR(expected_error(omega_independent({Mat::Identity(20, 20), Mat::Identity(20, 20)}), unit), 10.0, 1e-12);
  CounterRng rng(10);
  const Mat g = random_pd(4, rng);
  EXPECT_NEAR(expected_error(FusionRule::average(1), NoiseCovariance(g, 4, 1)), g.trace(), 1e-12);
}

TEST(ExpectedError, MonteCarlo) {
  CounterRng rng(11);
  const Index n = 3, k = 2;
  const Mat g = random_pd(n * k, rng);
  const NoiseCovariance cov(g, n, k);
  const FusionRule r = omega_full(cov);
  const Mat L = g.llt().matrixL();
  const Index draws = 100000;
  const Mat e = L * gaussian_matrix(n * k, draws, rng);
  const double mc = (r.stacked(n) * e).colwise().squaredNorm().mean();
  const double exact = expected_error(r, cov);
  EXPECT_LT(std::abs(mc - exact) / exact, 0.02);
}

TEST(EstimateCovariance, ZeroErrorsGiveRidge) {
  const auto est = estimate_covariance(Mat::Zero(4, 10), 2, 2, 1e-6);
  EXPECT_LT((est.covariance.matrix() - 1e-6 * Mat::Identity(4, 4)).norm(), 1e-20);
  EXPECT_LT((est.correlation - Mat::Identity(4, 4)).norm(), 1e-12);
}

TEST(EstimateCovariance, SingleCoordinateVariance) {
  Mat e(1, 4);
  e << 1, 2, 3, 6;  // mean 3, population variance (4 + 1 + 0 + 9) / 4
  const auto est = estimate_covariance(e, 1, 1, 0.25);
  EXPECT_DOUBLE_EQ(est.covariance.matrix()(0, 0), 3.5 + 0.25);
}

TEST(EstimateCovariance, RecoversGenerator) {
  CounterRng rng(12);
  const Mat g = random_pd(10, rng);
  const Mat L = g.llt().matrixL();
  const auto est = estimate_covariance(L * gaussian_matrix(10, 100000, rng), 5, 2);
  EXPECT_LT((est.covariance.matrix() - g).norm() / g.norm(), 0.05);
  EXPECT_LT((est.correlation.diagonal() - Vec::Ones(10)).norm(), 1e-15);
}

TEST(EstimateCovariance, NeedsTwoSamples) {
  EXPECT_THROW(estimate_covariance(Mat::Zero(2, 1), 1, 2), DimensionError);
}
