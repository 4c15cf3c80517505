#ifndef CCS_DIAGNOSTICS_HPP
#define CCS_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "ccs/core.hpp"
#include "ccs/rng.hpp"

namespace ccs {

/// max_{i != j} |q_i^T q_j| / (||q_i|| ||q_j||)
inline double mutual_coherence(const Mat& Q) {
  Vec norms = Q.colwise().norm().transpose();
  if (Q.cols() > 0 && !(norms.minCoeff() > 0.0)) throw NumericalError("mutual_coherence: zero column");
  const Mat g = Q.transpose() * Q;
  double mu = 0.0;
  for (Index j = 0; j < Q.cols(); ++j)
    for (Index i = j + 1; i < Q.cols(); ++i) mu = std::max(mu, std::abs(g(i, j)) / (norms(i) * norms(j)));
  return mu;
}

/// sqrt((L - N) / (N (L - 1))), or 0 when L <= N.
inline double welch_bound(Index L, Index N) {
  if (L <= N || N < 1) return 0.0;
  return std::sqrt(static_cast<double>(L - N) / (static_cast<double>(N) * static_cast<double>(L - 1)));
}

struct RipEstimate {
  double lo = 0.0;
  double hi = 0.0;
  Mat samples;  // L x trials, each column kappa-sparse
};

/// Random kappa-sparse vectors: uniform support, standard normal entries.
inline Mat sparse_samples(Index L, Index kappa, Index trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("rip_estimate: trials must be positive");
  if (kappa < 1 || kappa > L) throw ConfigError("rip_estimate: kappa must lie in [1, L]");
  CounterRng rng(seed, 0x52495021ULL);
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat s = Mat::Zero(L, trials);
  std::vector<Index> idx(static_cast<std::size_t>(L));
  for (Index t = 0; t < trials; ++t) {
    std::iota(idx.begin(), idx.end(), Index{0});
    // Partial Fisher-Yates for the support.
    for (Index k = 0; k < kappa; ++k) {
      std::uniform_int_distribution<Index> pick(k, L - 1);
      std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    for (Index k = 0; k < kappa; ++k) {
      double v = 0.0;
      while (v == 0.0) v = nd(rng);
      s(idx[static_cast<std::size_t>(k)], t) = v;
    }
  }
  return s;
}

/// Extremes of ||Q s|| / ||s|| over the given samples.
inline std::pair<double, double> ratio_extremes(const Mat& num, const Mat& den) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Index t = 0; t < num.cols(); ++t) {
    const double r = num.col(t).norm() / den.col(t).norm();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

inline RipEstimate rip_estimate(const Mat& Q, Index kappa, Index trials, std::uint64_t seed) {
  RipEstimate r;
  r.samples = sparse_samples(Q.cols(), kappa, trials, seed);
  std::tie(r.lo, r.hi) = ratio_extremes(Q * r.samples, r.samples);
  return r;
}

/// Smallest delta with sqrt(1 - delta) <= lo and hi <= sqrt(1 + delta).
inline double rip_constant(double lo, double hi) { return std::max(1.0 - lo * lo, hi * hi - 1.0); }

/// Empirical isometry constants of Psi and of Phi on the range of Psi, and the
/// worst slack of the implied bounds on ||Phi Psi s|| / ||s|| (plain and
/// whitened sensing matrix). A negative slack is a violated bound.
struct RipChain {
  double gamma = 0.0;  // Psi
  double delta = 0.0;  // Phi on Psi s
  double lower = 0.0;
  double upper = 0.0;
  double worst_slack = 0.0;
  double pre_lower = 0.0;
  double pre_upper = 0.0;
  double pre_worst_slack = 0.0;
};

inline RipChain rip_chain(const Mat& phi, const Mat& psi, const Mat& samples) {
  RipChain c;
  const Mat x = psi * samples;
  const Mat y = phi * x;
  const auto [glo, ghi] = ratio_extremes(x, samples);
  const auto [dlo, dhi] = ratio_extremes(y, x);
  c.gamma = rip_constant(glo, ghi);
  c.delta = rip_constant(dlo, dhi);
  const double a = 1.0 - c.delta, b = 1.0 - c.gamma;
  c.lower = (a >= 0.0 && b >= 0.0) ? std::sqrt(a * b) : 0.0;
  c.upper = std::sqrt((1.0 + c.delta) * (1.0 + c.gamma));

  const Eigen::JacobiSVD<Mat> svd(phi);
  const Vec sv = svd.singularValues();
  double smax = sv(0), smin = 0.0;
  for (Index i = sv.size() - 1; i >= 0; --i)
    if (sv(i) > 1e-12 * smax) {
      smin = sv(i);
      break;
    }
  c.pre_lower = c.lower / smax;
  c.pre_upper = c.upper / smin;
  const Mat gram = phi * phi.transpose();
  const SymEig e = sym_eig(gram);
  const Mat w = e.vectors * e.values.cwiseSqrt().cwiseInverse().asDiagonal() * e.vectors.transpose();
  const Mat ybar = w * y;

  c.worst_slack = std::numeric_limits<double>::infinity();
  c.pre_worst_slack = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < samples.cols(); ++t) {
    const double sn = samples.col(t).norm();
    const double r = y.col(t).norm() / sn;
    const double rb = ybar.col(t).norm() / sn;
    c.worst_slack = std::min({c.worst_slack, r - c.lower, c.upper - r});
    c.pre_worst_slack = std::min({c.pre_worst_slack, rb - c.pre_lower, c.pre_upper - rb});
  }
  return c;
}

}  // namespace ccs

#endif
