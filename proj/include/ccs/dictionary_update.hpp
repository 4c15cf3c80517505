#ifndef CCS_DICTIONARY_UPDATE_HPP
#define CCS_DICTIONARY_UPDATE_HPP

#include <functional>
#include <vector>

#include "ccs/core.hpp"
#include "ccs/sphere_cqp.hpp"

namespace ccs {

/// E_l = C - B (Psi S - psi_l s_l^T), i.e. the residual with atom l removed.
inline Mat column_residual(const Mat& B, const Mat& C, const Mat& psi, const Mat& S, Index ell) {
  if (ell < 0 || ell >= psi.cols()) throw DimensionError("column_residual: atom index out of range");
  if (B.cols() != psi.rows() || S.rows() != psi.cols() || C.rows() != B.rows() || C.cols() != S.cols())
    throw DimensionError("column_residual: shape mismatch");
  const Mat e_full = C - B * (psi * S);
  return e_full + (B * psi.col(ell)) * S.row(ell);
}

/// Called after column `ell` has been replaced; receives the current dictionary.
using ColumnObserver = std::function<void(Index ell, const Mat& psi)>;

/// One Gauss-Seidel sweep over the atoms of a dictionary.
///
/// Atom l minimizes ||E_l - B psi s_l^T||^2 + nu2 ||psi - psi'_l||^2 over the
/// unit sphere. The spectrum of B^T B is computed once; each column's
/// quadratic only rescales and shifts it.
inline Dictionary update_dictionary(const SensingMatrix& phi, const Dictionary& psi_prev, const SparseCodeMatrix& S,
                                    const Mat& X, double alpha, double beta, double nu2,
                                    const ColumnObserver& observer = {}) {
  if (!(nu2 >= 0.0)) throw ConfigError("update_dictionary: nu2 must be nonnegative");
  if (psi_prev.rows() != phi.cols() || X.rows() != phi.cols() || S.rows() != psi_prev.atoms() ||
      S.cols() != X.cols())
    throw DimensionError("update_dictionary: shape mismatch");

  const Stacked st = build_stacked(phi, X, alpha, beta);
  const Mat& B = st.B;
  const Mat BtB = B.transpose() * B;
  const SymEig eig = sym_eig(BtB);

  Mat psi = psi_prev.matrix();
  Mat E = st.C - B * (psi * S);
  std::vector<Index> nz;

  for (Index ell = 0; ell < psi.cols(); ++ell) {
    nz.clear();
    double c2 = 0.0;
    for (Index j = 0; j < S.cols(); ++j) {
      const double v = S(ell, j);
      if (v != 0.0) {
        nz.push_back(j);
        c2 += v * v;
      }
    }
    if (c2 == 0.0 && nu2 == 0.0) {
      if (observer) observer(ell, psi);
      continue;
    }
    const Vec old = psi.col(ell);
    Vec es = Vec::Zero(E.rows());
    for (Index j : nz) es.noalias() += S(ell, j) * E.col(j);
    const Vec d = B.transpose() * es + c2 * (BtB * old) + nu2 * old;
    const Vec sigma = (c2 * eig.values).array() + nu2;
    const CqpSolution sol = solve_sphere_cqp_spectral(sigma, eig.vectors, d);

    const Vec fresh = sol.h / sol.h.norm();
    const Vec delta = B * (old - fresh);
    for (Index j : nz) E.col(j).noalias() += S(ell, j) * delta;
    psi.col(ell) = fresh;
    if (observer) observer(ell, psi);
  }
  return Dictionary(std::move(psi));
}

}  // namespace ccs

#endif
