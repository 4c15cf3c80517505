#include <gtest/gtest.h>

#include "ccs/ccs.hpp"
#include "oracles.hpp"

using namespace ccs;

TEST(Coherence, Examples) {
  CounterRng rng(1);
  EXPECT_NEAR(mutual_coherence(oracle::random_orthogonal(5, rng)), 0.0, 1e-14);
  Mat dup = gaussian_matrix(4, 3, rng);
  dup.col(2) = -2.0 * dup.col(0);
  EXPECT_NEAR(mutual_coherence(dup), 1.0, 1e-14);
  const Mat q = Dictionary::normalized(gaussian_matrix(64, 100, rng)).matrix();
  EXPECT_GE(mutual_coherence(q), welch_bound(100, 64));
  EXPECT_THROW(mutual_coherence(Mat::Zero(3, 2)), NumericalError);
}

TEST(Welch, Values) {
  EXPECT_NEAR(welch_bound(100, 64), 0.07537783614444091, 1e-15);
  EXPECT_EQ(welch_bound(64, 64), 0.0);
  for (Index n = 2; n <= 40; n += 7)
    for (Index l = n + 1; l < 200; ++l) EXPECT_GT(welch_bound(l + 1, n), welch_bound(l, n));
}

TEST(Rip, OrthogonalAndSingleAtom) {
  CounterRng rng(2);
  const RipEstimate a = rip_estimate(oracle::random_orthogonal(6, rng), 3, 500, 7);
  EXPECT_NEAR(a.lo, 1.0, 1e-12);
  EXPECT_NEAR(a.hi, 1.0, 1e-12);
  const RipEstimate b = rip_estimate(Dictionary::normalized(gaussian_matrix(5, 12, rng)).matrix(), 1, 500, 7);
  EXPECT_NEAR(b.lo, 1.0, 1e-12);
  EXPECT_NEAR(b.hi, 1.0, 1e-12);
}

TEST(Rip, DeterministicAndOrdered) {
  CounterRng rng(3);
  const Mat q = gaussian_matrix(6, 15, rng);
  const RipEstimate a = rip_estimate(q, 3, 300, 11), b = rip_estimate(q, 3, 300, 11);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_GE(a.hi, a.lo);
  EXPECT_GE(a.lo, 0.0);
  for (Index t = 0; t < a.samples.cols(); ++t) EXPECT_EQ((a.samples.col(t).array() != 0.0).count(), 3);
}

TEST(Rip, ChainHoldsOnSharedSamples) {
  CounterRng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat psi = Dictionary::normalized(gaussian_matrix(16, 25, rng)).matrix();
    const Mat phi = trial % 2 ? gaussian_matrix(8, 16, rng) : oracle::random_orthonormal_rows(8, 16, rng);
    const Mat s = sparse_samples(25, 3, 2000, 5 + static_cast<std::uint64_t>(trial));
    const RipChain c = rip_chain(phi, psi, s);
    EXPECT_GE(c.worst_slack, -1e-9);
    EXPECT_GE(c.pre_worst_slack, -1e-9);
  }
}

TEST(Rip, RejectsBadParameters) {
  EXPECT_THROW(sparse_samples(5, 6, 10, 1), ConfigError);
  EXPECT_THROW(sparse_samples(5, 2, 0, 1), ConfigError);
}
