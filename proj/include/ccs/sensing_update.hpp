#ifndef CCS_SENSING_UPDATE_HPP
#define CCS_SENSING_UPDATE_HPP

#include <vector>

#include "ccs/core.hpp"
#include "ccs/parallel.hpp"

namespace ccs {

/// beta (Psi S)(Psi S)^T - alpha (X - Psi S)(X - Psi S)^T, symmetrized.
inline Mat g_matrix(const Dictionary& psi, const SparseCodeMatrix& S, const Mat& X, double alpha, double beta) {
  if (S.rows() != psi.atoms() || S.cols() != X.cols() || X.rows() != psi.rows())
    throw DimensionError("g_matrix: shape mismatch");
  const Mat ps = psi.matrix() * S;
  const Mat r = X - ps;
  Mat g = beta * (ps * ps.transpose()) - alpha * (r * r.transpose());
  return 0.5 * (g + g.transpose());
}

struct Branch {
  const Dictionary* psi;
  const SparseCodeMatrix* codes;
  const Mat* data;
};

/// G~ = sum_i G(Psi_i, S_i, X_i) + 2 nu1 Phi_prev^T Phi_prev, summed in branch order.
inline Mat sensing_target(const std::vector<Branch>& branches, const SensingMatrix& phi_prev, double alpha,
                          double beta, double nu1) {
  const Index n = phi_prev.cols();
  std::vector<Mat> parts(branches.size());
  parallel_for(branches.size(), [&](std::size_t i) {
    parts[i] = g_matrix(*branches[i].psi, *branches[i].codes, *branches[i].data, alpha, beta);
  });
  Mat g = 2.0 * nu1 * (phi_prev.matrix().transpose() * phi_prev.matrix());
  for (const auto& p : parts) {
    if (p.rows() != n) throw DimensionError("update_sensing: branch dimension mismatch");
    g += p;
  }
  return 0.5 * (g + g.transpose());
}

/// Maximizes trace(Phi^T Phi G~) over unit tight frames, then rotates the
/// optimal row space onto the frame closest to phi_prev.
inline SensingMatrix update_sensing(const std::vector<Branch>& branches, const SensingMatrix& phi_prev, double alpha,
                                    double beta, double nu1) {
  const Index m = phi_prev.rows();
  const Mat g = sensing_target(branches, phi_prev, alpha, beta, nu1);
  const SymEig e = sym_eig(g);
  const Mat Z = e.vectors.leftCols(m).transpose();
  const Mat cross = Z * phi_prev.matrix().transpose();
  Eigen::JacobiSVD<Mat> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat U = svd.matrixV() * svd.matrixU().transpose();
  return SensingMatrix(U * Z);
}

}  // namespace ccs

#endif
