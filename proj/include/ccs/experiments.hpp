#ifndef CCS_EXPERIMENTS_HPP
#define CCS_EXPERIMENTS_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "ccs/codec.hpp"
#include "ccs/core.hpp"
#include "ccs/fusion.hpp"
#include "ccs/rng.hpp"

namespace ccs {

// ---------------------------------------------------------------------------
// Synthetic fusion study: K noisy copies of Gaussian signals with correlated
// Gaussian errors, Gamma = sigma^2 G1 G1^T.

struct MleDemoRow {
  Index count = 0;  // estimators fused
  double ind = 0.0;  // RMSE of estimator `count` alone
  double mle1 = 0.0;
  double mle2 = 0.0;
  double mle3 = 0.0;
};

struct MleDemo {
  std::vector<MleDemoRow> rows;
  Mat correlation;  // normalized Gamma
};

namespace detail {
struct MleSample {
  Mat x;      // N x J
  Mat noise;  // NK x J, unit-scale (multiply by sigma)
  Mat gamma;  // NK x NK, unit-scale
};

inline MleSample draw_mle_sample(Index n, Index k, Index j, std::uint64_t seed) {
  CounterRng rng(seed);
  MleSample s;
  const Mat g1 = gaussian_matrix(n * k, n * k, rng);
  s.gamma = g1 * g1.transpose();
  s.x = gaussian_matrix(n, j, rng);
  s.noise = g1 * gaussian_matrix(n * k, j, rng);
  return s;
}

inline MleDemo evaluate_mle(const MleSample& s, Index n, Index k, double sigma) {
  MleDemo out;
  const Mat gamma = sigma * sigma * s.gamma;
  const Mat noise = sigma * s.noise;
  std::vector<Mat> est;
  for (Index i = 0; i < k; ++i) est.push_back(s.x + noise.middleRows(i * n, n));

  const Vec d = gamma.diagonal().cwiseSqrt().cwiseInverse();
  out.correlation = d.asDiagonal() * gamma * d.asDiagonal();

  for (Index i = 1; i <= k; ++i) {
    MleDemoRow row;
    row.count = i;
    row.ind = rmse_relative(s.x, est[static_cast<std::size_t>(i - 1)]);
    const std::vector<Mat> first(est.begin(), est.begin() + i);
    const NoiseCovariance cov(gamma.topLeftCorner(i * n, i * n), n, i);
    row.mle1 = rmse_relative(s.x, fuse(omega_full(cov), first));
    std::vector<Mat> blocks;
    for (Index q = 0; q < i; ++q) blocks.push_back(cov.block(q, q));
    row.mle2 = rmse_relative(s.x, fuse(omega_independent(blocks), first));
    row.mle3 = rmse_relative(s.x, fuse(FusionRule::average(i), first));
    out.rows.push_back(row);
  }
  return out;
}
}  // namespace detail

inline MleDemo run_mle_demo(Index n, Index k, Index j, double sigma, std::uint64_t seed) {
  if (n < 1 || k < 1 || j < 1 || !(sigma > 0.0)) throw ConfigError("mle demo: parameters must be positive");
  return detail::evaluate_mle(detail::draw_mle_sample(n, k, j, seed), n, k, sigma);
}

struct MleSigmaRow {
  double sigma = 0.0;
  double ind = 0.0;  // best single estimator
  double mle1 = 0.0;
  double mle2 = 0.0;
  double mle3 = 0.0;
};

/// All estimators fused, over a range of noise scales (same draws, rescaled).
inline std::vector<MleSigmaRow> run_mle_sigma_sweep(Index n, Index k, Index j, const std::vector<double>& sigmas,
                                                    std::uint64_t seed) {
  if (n < 1 || k < 1 || j < 1) throw ConfigError("mle demo: parameters must be positive");
  const auto sample = detail::draw_mle_sample(n, k, j, seed);
  std::vector<MleSigmaRow> rows;
  for (double sg : sigmas) {
    if (!(sg > 0.0)) throw ConfigError("mle demo: sigma must be positive");
    const MleDemo d = detail::evaluate_mle(sample, n, k, sg);
    MleSigmaRow r;
    r.sigma = sg;
    r.ind = d.rows.front().ind;
    for (const auto& row : d.rows) r.ind = std::min(r.ind, row.ind);
    r.mle1 = d.rows.back().mle1;
    r.mle2 = d.rows.back().mle2;
    r.mle3 = d.rows.back().mle3;
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Image experiments

/// Patches of all images, shuffled with `seed` and dealt round-robin to K
/// branches. Every branch gets the same count: j0 if positive, otherwise as
/// many as the smallest branch holds.
inline TrainingSet build_training_set(const std::vector<Mat>& images, Index p, Index k, Index j0, std::uint64_t seed) {
  if (k < 1) throw ConfigError("training set: K must be at least 1");
  std::vector<Mat> parts;
  Index total = 0;
  for (const auto& img : images) {
    parts.push_back(extract_patches(img, p).data);
    total += parts.back().cols();
  }
  Mat all(p * p, total);
  Index at = 0;
  for (const auto& m : parts) {
    all.middleCols(at, m.cols()) = m;
    at += m.cols();
  }
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  CounterRng rng(seed, 0x5348554646ULL);
  for (Index i = total - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  const Index per = total / k;
  const Index take = j0 > 0 ? j0 : per;
  if (take < 1 || take > per) throw ConfigError("training set: not enough patches for the requested j0");
  std::vector<Mat> blocks(static_cast<std::size_t>(k), Mat(p * p, take));
  for (Index q = 0; q < take * k; ++q)
    blocks[static_cast<std::size_t>(q % k)].col(q / k) = all.col(order[static_cast<std::size_t>(q)]);
  return TrainingSet(std::move(blocks));
}

struct ImageEvaluation {
  Mat reference;  // cropped input
  Mat fused;
  std::vector<Mat> branches;
  double fused_psnr = 0.0;
  std::vector<double> branch_psnr;

  double mean_branch_psnr() const {
    return std::accumulate(branch_psnr.begin(), branch_psnr.end(), 0.0) / static_cast<double>(branch_psnr.size());
  }
};

/// Compress every patch, reconstruct with each branch and fuse.
inline ImageEvaluation evaluate_image(const CcsModel& model, const Mat& image, const FusionRule& rule,
                                      Scheme scheme = Scheme::Prs, int depth = 8) {
  const Index p = detail::exact_sqrt(model.config.N);
  if (p < 1) throw ConfigError("evaluate_image: N must be a perfect square");
  const Patches pt = extract_patches(image, p);
  const Mat Y = compress_all(model.phi, pt.data);
  const CcsReconstruction rec = ccs_reconstruct_all(model, Y, rule, scheme);
  ImageEvaluation ev;
  ev.reference = assemble_patches(pt.data, pt.grid);
  ev.fused = assemble_patches(rec.fused, pt.grid);
  ev.fused_psnr = psnr(ev.reference, ev.fused, depth);
  for (const auto& b : rec.branches) {
    ev.branches.push_back(assemble_patches(b, pt.grid));
    ev.branch_psnr.push_back(psnr(ev.reference, ev.branches.back(), depth));
  }
  return ev;
}

}  // namespace ccs

#endif
