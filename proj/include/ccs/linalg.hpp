#ifndef CCS_LINALG_HPP
#define CCS_LINALG_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ccs/error.hpp"

namespace ccs {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Mat& a) { return a.allFinite(); }

/** \brief Eigenpairs sorted by descending eigenvalue. */
struct SymEig {
  Mat vectors;  // columns
  Vec values;
};

/// Symmetric eigendecomposition with a deterministic ordering and sign.
///
/// Input is symmetrized first. Ties keep the solver's ascending order
/// reversed stably, and each eigenvector is flipped so that its first
/// largest-magnitude entry is nonnegative.
inline SymEig sym_eig(const Mat& q) {
  if (q.rows() != q.cols()) throw DimensionError("sym_eig: matrix is not square");
  if (!q.allFinite()) throw NumericalError("sym_eig: non-finite entries");
  const Index n = q.rows();
  SymEig out;
  if (n == 0) return out;
  Mat s = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver failed");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Vec& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return ev(a) > ev(b); });

  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = ev(src);
    Vec v = es.eigenvectors().col(src);
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > best) {
        best = std::abs(v(i));
        arg = i;
      }
    }
    if (v(arg) < 0.0) v = -v;
    out.vectors.col(k) = v;
  }
  return out;
}

/// R = Q^{-1/2} for symmetric positive definite Q.
inline Mat psd_inv_sqrt(const Mat& q) {
  const SymEig e = sym_eig(q);
  const Index n = e.values.size();
  if (n == 0) return Mat(0, 0);
  const double scale = e.values.cwiseAbs().maxCoeff();
  const double smallest = e.values(n - 1);
  if (!(smallest > 1e-12 * scale) || scale == 0.0)
    throw NumericalError("psd_inv_sqrt: matrix is singular or indefinite");
  const Vec w = e.values.cwiseSqrt().cwiseInverse();
  return e.vectors * w.asDiagonal() * e.vectors.transpose();
}

}  // namespace ccs

#endif
