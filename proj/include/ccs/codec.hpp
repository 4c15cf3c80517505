#ifndef CCS_CODEC_HPP
#define CCS_CODEC_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "ccs/core.hpp"
#include "ccs/fusion.hpp"
#include "ccs/parallel.hpp"
#include "ccs/sparse_coding.hpp"

namespace ccs {

struct PatchGrid {
  Index p = 8;
  Index rows = 0;  // patches per column of the image
  Index cols = 0;  // patches per row
  Index height = 0;
  Index width = 0;
  int depth = 8;

  Index count() const { return rows * cols; }
};

struct Patches {
  Mat data;  // p^2 x (rows * cols)
  PatchGrid grid;
};

/// Non-overlapping p x p blocks in raster order, each flattened column-major.
/// Trailing rows and columns that do not fill a block are dropped.
inline Patches extract_patches(const Mat& image, Index p = 8) {
  if (p < 1 || image.rows() < p || image.cols() < p) throw DimensionError("extract_patches: image smaller than a patch");
  Patches out;
  out.grid.p = p;
  out.grid.rows = image.rows() / p;
  out.grid.cols = image.cols() / p;
  out.grid.height = image.rows();
  out.grid.width = image.cols();
  out.data.resize(p * p, out.grid.count());
  for (Index r = 0; r < out.grid.rows; ++r)
    for (Index c = 0; c < out.grid.cols; ++c) {
      const Index j = r * out.grid.cols + c;
      for (Index b = 0; b < p; ++b)
        for (Index a = 0; a < p; ++a) out.data(a + b * p, j) = image(r * p + a, c * p + b);
    }
  return out;
}

/// Inverse of extract_patches on the cropped (rows*p) x (cols*p) image.
inline Mat assemble_patches(const Mat& patches, const PatchGrid& grid) {
  const Index p = grid.p;
  if (patches.rows() != p * p || patches.cols() != grid.count()) throw DimensionError("assemble_patches: shape mismatch");
  Mat img(grid.rows * p, grid.cols * p);
  for (Index r = 0; r < grid.rows; ++r)
    for (Index c = 0; c < grid.cols; ++c) {
      const Index j = r * grid.cols + c;
      for (Index b = 0; b < p; ++b)
        for (Index a = 0; a < p; ++a) img(r * p + a, c * p + b) = patches(a + b * p, j);
    }
  return img;
}

inline Vec compress(const SensingMatrix& phi, const Vec& x) {
  if (x.size() != phi.cols()) throw DimensionError("compress: signal length must equal N");
  return phi.matrix() * x;
}

/// Compresses every column.
inline Mat compress_all(const SensingMatrix& phi, const Mat& x) {
  if (x.rows() != phi.cols()) throw DimensionError("compress: signal length must equal N");
  return phi.matrix() * x;
}

/// (Phi Phi^T)^{-1/2}, or the identity when Phi is already a unit tight frame.
inline Mat whitening(const SensingMatrix& phi) {
  const Index m = phi.rows();
  const Mat gram = phi.matrix() * phi.matrix().transpose();
  if ((gram - Mat::Identity(m, m)).norm() <= 1e-12) return Mat::Identity(m, m);
  try {
    return psd_inv_sqrt(gram);
  } catch (const NumericalError&) {
    throw NumericalError("precondition: sensing matrix is rank deficient");
  }
}

struct Preconditioned {
  Mat phi_bar;
  Vec y_bar;
};

inline Preconditioned precondition(const SensingMatrix& phi, const Vec& y) {
  if (y.size() != phi.rows()) throw DimensionError("precondition: measurement length must equal M");
  const Mat r = whitening(phi);
  return {r * phi.matrix(), r * y};
}

enum class Scheme { Standard, Prs };

/// Recovers all columns of Y with one dictionary; returns Psi * S_hat.
inline Mat reconstruct_branch_all(const SensingMatrix& phi, const Dictionary& psi, const Mat& Y, Index kappa,
                                  Scheme scheme = Scheme::Prs) {
  if (Y.rows() != phi.rows() || psi.rows() != phi.cols()) throw DimensionError("reconstruct_branch: shape mismatch");
  Mat A = phi.matrix() * psi.matrix();
  Mat Yw = Y;
  if (scheme == Scheme::Prs) {
    const Mat r = whitening(phi);
    A = r * A;
    Yw = r * Y;
  }
  Mat S = Mat::Zero(psi.atoms(), Y.cols());
  parallel_for(static_cast<std::size_t>(Y.cols()), [&](std::size_t j) {
    const auto jj = static_cast<Index>(j);
    S.col(jj) = omp(A, Yw.col(jj), kappa).code;
  });
  return psi.matrix() * S;
}

inline Vec reconstruct_branch(const SensingMatrix& phi, const Dictionary& psi, const Vec& y, Index kappa,
                              Scheme scheme = Scheme::Prs) {
  return reconstruct_branch_all(phi, psi, Mat(y), kappa, scheme).col(0);
}

struct CcsReconstruction {
  std::vector<Mat> branches;
  Mat fused;
};

inline CcsReconstruction ccs_reconstruct_all(const CcsModel& model, const Mat& Y, const FusionRule& rule,
                                             Scheme scheme = Scheme::Prs) {
  if (rule.branches() != model.branches()) throw DimensionError("ccs_reconstruct: rule does not match model");
  CcsReconstruction out;
  for (const auto& psi : model.dictionaries)
    out.branches.push_back(reconstruct_branch_all(model.phi, psi, Y, model.config.kappa, scheme));
  out.fused = fuse(rule, out.branches);
  return out;
}

inline Vec ccs_reconstruct(const CcsModel& model, const Vec& y, const FusionRule& rule, Scheme scheme = Scheme::Prs) {
  return ccs_reconstruct_all(model, Mat(y), rule, scheme).fused.col(0);
}

/// 10 log10((2^r - 1)^2 / mse); +infinity for identical images.
inline double psnr(const Mat& reference, const Mat& estimate, int r = 8) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
    throw DimensionError("psnr: image sizes differ");
  const double mse = (reference - estimate).squaredNorm() / static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = std::ldexp(1.0, r) - 1.0;
  return 10.0 * std::log10(peak * peak / mse);
}

/// Mean over columns of ||x_j - x_hat_j|| / ||x_j||.
inline double rmse_relative(const Mat& refs, const Mat& ests) {
  if (refs.rows() != ests.rows() || refs.cols() != ests.cols()) throw DimensionError("rmse_relative: shape mismatch");
  if (refs.cols() == 0) throw DimensionError("rmse_relative: no samples");
  double acc = 0.0;
  for (Index j = 0; j < refs.cols(); ++j) {
    const double n = refs.col(j).norm();
    if (n == 0.0) throw NumericalError("rmse_relative: zero-norm reference vector");
    acc += (refs.col(j) - ests.col(j)).norm() / n;
  }
  return acc / static_cast<double>(refs.cols());
}

}  // namespace ccs

#endif
