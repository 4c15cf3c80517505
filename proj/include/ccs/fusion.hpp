#ifndef CCS_FUSION_HPP
#define CCS_FUSION_HPP

#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ccs/error.hpp"
#include "ccs/linalg.hpp"

namespace ccs {

/// Covariance of the stacked error of K estimators of an N-vector.
class NoiseCovariance {
 public:
  NoiseCovariance() = default;
  NoiseCovariance(Mat gamma, Index n, Index k) : g_(std::move(gamma)), n_(n), k_(k) {
    if (n < 1 || k < 1 || g_.rows() != n * k || g_.cols() != n * k)
      throw DimensionError("NoiseCovariance: expected an NK x NK matrix");
    if (!g_.allFinite()) throw NumericalError("NoiseCovariance: non-finite entries");
    if ((g_ - g_.transpose()).norm() > 1e-10 * std::max(1.0, g_.norm()))
      throw NumericalError("NoiseCovariance: matrix is not symmetric");
    g_ = 0.5 * (g_ + g_.transpose());
  }

  const Mat& matrix() const { return g_; }
  Index dim() const { return n_; }
  Index branches() const { return k_; }
  Mat block(Index i, Index j) const { return g_.block(i * n_, j * n_, n_, n_); }

 private:
  Mat g_;
  Index n_ = 0;
  Index k_ = 0;
};

/// Linear fusion x = sum_i Omega_i x_i with sum_i Omega_i = I.
class FusionRule {
 public:
  enum class Kind { Full, Diagonal, Scalar };

  static FusionRule full(std::vector<Mat> blocks) {
    FusionRule r;
    r.data_ = std::move(blocks);
    r.check();
    return r;
  }
  static FusionRule diagonal(std::vector<Vec> diags) {
    FusionRule r;
    r.data_ = std::move(diags);
    r.check();
    return r;
  }
  static FusionRule scalar(std::vector<double> weights) {
    FusionRule r;
    r.data_ = std::move(weights);
    r.check();
    return r;
  }
  /// Plain averaging, omega_i = 1/K.
  static FusionRule average(Index k) {
    if (k < 1) throw DimensionError("FusionRule: K must be at least 1");
    return scalar(std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k)));
  }

  Kind kind() const { return static_cast<Kind>(data_.index()); }

  Index branches() const {
    return std::visit([](const auto& v) { return static_cast<Index>(v.size()); }, data_);
  }

  /// Signal dimension, or 0 for scalar rules which apply to any N.
  Index dim() const {
    switch (kind()) {
      case Kind::Full: return std::get<0>(data_).front().rows();
      case Kind::Diagonal: return std::get<1>(data_).front().size();
      case Kind::Scalar: return 0;
    }
    return 0;
  }

  /// Omega_i as a dense n x n matrix.
  Mat block(Index i, Index n) const {
    const auto k = static_cast<std::size_t>(i);
    switch (kind()) {
      case Kind::Full: return std::get<0>(data_)[k];
      case Kind::Diagonal: return std::get<1>(data_)[k].asDiagonal();
      case Kind::Scalar: return std::get<2>(data_)[k] * Mat::Identity(n, n);
    }
    return {};
  }

  const std::vector<Mat>& full_blocks() const { return std::get<0>(data_); }
  const std::vector<Vec>& diagonals() const { return std::get<1>(data_); }
  const std::vector<double>& weights() const { return std::get<2>(data_); }

  /// Horizontal concatenation [Omega_1 ... Omega_K].
  Mat stacked(Index n) const {
    const Index k = branches();
    Mat o(n, n * k);
    for (Index i = 0; i < k; ++i) o.middleCols(i * n, n) = block(i, n);
    return o;
  }

 private:
  void check() const {
    if (branches() < 1) throw DimensionError("FusionRule: no branches");
    const Index n = std::max<Index>(dim(), 1);
    Mat sum = Mat::Zero(n, n);
    for (Index i = 0; i < branches(); ++i) {
      const Mat b = block(i, n);
      if (b.rows() != n || b.cols() != n) throw DimensionError("FusionRule: blocks differ in shape");
      sum += b;
    }
    if ((sum - Mat::Identity(n, n)).norm() > 1e-8 * std::sqrt(static_cast<double>(n)))
      throw NumericalError("FusionRule: blocks do not sum to identity");
  }

  std::variant<std::vector<Mat>, std::vector<Vec>, std::vector<double>> data_;
};

namespace detail {
/// Cholesky factorization, retried with the default ridge if needed.
inline Eigen::LLT<Mat> factor_spd(const Mat& g, const char* who) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() == Eigen::Success) return llt;
  const double ridge = 1e-8 * g.trace() / static_cast<double>(g.rows());
  if (ridge > 0.0) {
    llt.compute(g + ridge * Mat::Identity(g.rows(), g.cols()));
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError(std::string(who) + ": covariance is singular beyond the ridge tolerance");
}
}  // namespace detail

/// MLE fusion for jointly Gaussian errors: Omega = (I^T G I)^{-1} I^T G with G = Gamma^{-1}.
inline FusionRule omega_full(const NoiseCovariance& cov) {
  const Index n = cov.dim(), k = cov.branches();
  const auto llt = detail::factor_spd(cov.matrix(), "omega_full");
  Mat ibar(n * k, n);
  for (Index i = 0; i < k; ++i) ibar.middleRows(i * n, n).setIdentity();
  const Mat w = llt.solve(ibar);  // Gamma^{-1} I, NK x N
  Mat h = Mat::Zero(n, n);
  for (Index i = 0; i < k; ++i) h += w.middleRows(i * n, n);
  h = 0.5 * (h + h.transpose());
  const Eigen::LLT<Mat> hl = detail::factor_spd(h, "omega_full");
  std::vector<Mat> blocks;
  for (Index i = 0; i < k; ++i) blocks.push_back(hl.solve(w.middleRows(i * n, n).transpose()));
  // Remove accumulated rounding so the blocks partition the identity exactly.
  Mat sum = Mat::Zero(n, n);
  for (const auto& b : blocks) sum += b;
  blocks.back() += Mat::Identity(n, n) - sum;
  return FusionRule::full(std::move(blocks));
}

namespace detail {
inline bool is_diagonal(const Mat& m) {
  const double off = (m - Mat(m.diagonal().asDiagonal())).norm();
  return off <= 1e-12 * m.norm();
}
inline bool is_scalar(const Mat& m) {
  const double s = m.diagonal().mean();
  return (m - s * Mat::Identity(m.rows(), m.cols())).norm() <= 1e-12 * m.norm();
}
}  // namespace detail

/// Fusion for independent branches: Omega_i = (sum_k Gamma_k^{-1})^{-1} Gamma_i^{-1}.
/// Returns the cheapest variant that represents the rule exactly.
inline FusionRule omega_independent(const std::vector<Mat>& gammas) {
  if (gammas.empty()) throw DimensionError("omega_independent: no blocks");
  const Index n = gammas.front().rows();
  bool diag = true, scal = true;
  for (const auto& g : gammas) {
    if (g.rows() != n || g.cols() != n) throw DimensionError("omega_independent: blocks differ in shape");
    diag = diag && detail::is_diagonal(g);
    scal = scal && detail::is_scalar(g);
  }
  if (scal) {
    std::vector<double> w;
    double total = 0.0;
    for (const auto& g : gammas) {
      const double e2 = g.diagonal().mean();
      if (!(e2 > 0.0)) throw NumericalError("omega_independent: singular block");
      w.push_back(1.0 / e2);
      total += 1.0 / e2;
    }
    for (auto& v : w) v /= total;
    return FusionRule::scalar(std::move(w));
  }
  if (diag) {
    std::vector<Vec> inv;
    Vec total = Vec::Zero(n);
    for (const auto& g : gammas) {
      if (!(g.diagonal().minCoeff() > 0.0)) throw NumericalError("omega_independent: singular block");
      inv.push_back(g.diagonal().cwiseInverse());
      total += inv.back();
    }
    for (auto& v : inv) v = v.cwiseQuotient(total);
    return FusionRule::diagonal(std::move(inv));
  }
  std::vector<Mat> inv;
  Mat total = Mat::Zero(n, n);
  for (const auto& g : gammas) {
    Mat gs = 0.5 * (g + g.transpose());
    const auto llt = detail::factor_spd(gs, "omega_independent");
    inv.push_back(llt.solve(Mat::Identity(n, n)));
    inv.back() = 0.5 * (inv.back() + inv.back().transpose());
    total += inv.back();
  }
  const auto tl = detail::factor_spd(total, "omega_independent");
  std::vector<Mat> blocks;
  for (const auto& gi : inv) blocks.push_back(tl.solve(gi));
  Mat sum = Mat::Zero(n, n);
  for (const auto& b : blocks) sum += b;
  blocks.back() += Mat::Identity(n, n) - sum;
  return FusionRule::full(std::move(blocks));
}

/// sum_i Omega_i x_i
inline Vec fuse(const FusionRule& rule, const std::vector<Vec>& estimates) {
  if (static_cast<Index>(estimates.size()) != rule.branches()) throw DimensionError("fuse: branch count mismatch");
  const Index n = estimates.front().size();
  if (rule.dim() != 0 && rule.dim() != n) throw DimensionError("fuse: estimate length mismatch");
  Vec x = Vec::Zero(n);
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].size() != n) throw DimensionError("fuse: estimates differ in length");
    switch (rule.kind()) {
      case FusionRule::Kind::Full: x.noalias() += rule.full_blocks()[i] * estimates[i]; break;
      case FusionRule::Kind::Diagonal: x += rule.diagonals()[i].cwiseProduct(estimates[i]); break;
      case FusionRule::Kind::Scalar: x += rule.weights()[i] * estimates[i]; break;
    }
  }
  return x;
}

/// Column-wise fusion of K estimate matrices (N x J each).
inline Mat fuse(const FusionRule& rule, const std::vector<Mat>& estimates) {
  if (static_cast<Index>(estimates.size()) != rule.branches()) throw DimensionError("fuse: branch count mismatch");
  const Index n = estimates.front().rows();
  if (rule.dim() != 0 && rule.dim() != n) throw DimensionError("fuse: estimate length mismatch");
  Mat x = Mat::Zero(n, estimates.front().cols());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].rows() != n || estimates[i].cols() != x.cols())
      throw DimensionError("fuse: estimates differ in shape");
    switch (rule.kind()) {
      case FusionRule::Kind::Full: x.noalias() += rule.full_blocks()[i] * estimates[i]; break;
      case FusionRule::Kind::Diagonal: x += rule.diagonals()[i].asDiagonal() * estimates[i]; break;
      case FusionRule::Kind::Scalar: x += rule.weights()[i] * estimates[i]; break;
    }
  }
  return x;
}

/// E||x_hat - x||^2 = trace(Omega Gamma Omega^T).
inline double expected_error(const FusionRule& rule, const NoiseCovariance& cov) {
  if (rule.branches() != cov.branches() || (rule.dim() != 0 && rule.dim() != cov.dim()))
    throw DimensionError("expected_error: rule does not match covariance");
  const Mat o = rule.stacked(cov.dim());
  return (o * cov.matrix() * o.transpose()).trace();
}

struct CovarianceEstimate {
  NoiseCovariance covariance;
  Mat correlation;
};

/// Sample covariance of demeaned stacked errors plus ridge * I, with its
/// normalized correlation matrix. A negative ridge selects 1e-8 trace / (NK).
inline CovarianceEstimate estimate_covariance(const Mat& errors, Index n, Index k, double ridge = -1.0) {
  if (errors.rows() != n * k) throw DimensionError("estimate_covariance: expected NK rows");
  if (errors.cols() < 2) throw DimensionError("estimate_covariance: need at least two samples");
  const Vec mean = errors.rowwise().mean();
  const Mat e = errors.colwise() - mean;
  Mat g = (e * e.transpose()) / static_cast<double>(errors.cols());
  if (ridge < 0.0) ridge = 1e-8 * g.trace() / static_cast<double>(n * k);
  g += ridge * Mat::Identity(n * k, n * k);
  const Vec dg = g.diagonal();
  if (!(dg.minCoeff() > 0.0)) throw NumericalError("estimate_covariance: zero-variance coordinate");
  const Vec s = dg.cwiseSqrt().cwiseInverse();
  Mat corr = s.asDiagonal() * g * s.asDiagonal();
  corr.diagonal().setOnes();
  return {NoiseCovariance(g, n, k), corr};
}

}  // namespace ccs

#endif
