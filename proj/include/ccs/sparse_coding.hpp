#ifndef CCS_SPARSE_CODING_HPP
#define CCS_SPARSE_CODING_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ccs/core.hpp"
#include "ccs/parallel.hpp"

namespace ccs {

struct OmpResult {
  Vec code;
  std::vector<Index> support;  // selection order
  double residual_norm = 0.0;
};

/// Orthogonal matching pursuit with at most kappa atoms.
///
/// Ties in the correlation pick the lowest index. Stops early once the
/// residual is numerically orthogonal to every atom, or when the next atom
/// is linearly dependent on those already chosen.
inline OmpResult omp(const Mat& A, const Vec& y, Index kappa) {
  if (A.rows() != y.size()) throw DimensionError("omp: A rows must equal y length");
  if (kappa < 1) throw ConfigError("omp: kappa must be at least 1");
  const Index L = A.cols();
  OmpResult res;
  res.code = Vec::Zero(L);
  Vec r = y;
  const double ynorm = y.norm();
  const double rank_tol = 1e-12 * A.norm();
  std::vector<char> chosen(static_cast<std::size_t>(L), 0);

  for (Index it = 0; it < std::min(kappa, L); ++it) {
    const Vec h = A.transpose() * r;
    Index best = -1;
    double peak = -1.0;
    for (Index l = 0; l < L; ++l) {
      if (chosen[static_cast<std::size_t>(l)]) continue;
      const double v = std::abs(h(l));
      if (v > peak) {
        peak = v;
        best = l;
      }
    }
    if (best < 0 || peak <= 1e-12 * ynorm) break;

    std::vector<Index> cand = res.support;
    cand.push_back(best);
    Mat As(A.rows(), static_cast<Index>(cand.size()));
    for (std::size_t k = 0; k < cand.size(); ++k) As.col(static_cast<Index>(k)) = A.col(cand[k]);
    Eigen::ColPivHouseholderQR<Mat> qr(As);
    const Mat& R = qr.matrixQR();
    bool full_rank = true;
    for (Index k = 0; k < As.cols(); ++k)
      if (!(std::abs(R(k, k)) > rank_tol)) full_rank = false;
    if (!full_rank) break;

    const Vec coef = qr.solve(y);
    res.support = std::move(cand);
    chosen[static_cast<std::size_t>(best)] = 1;
    res.code.setZero();
    for (std::size_t k = 0; k < res.support.size(); ++k) res.code(res.support[k]) = coef(static_cast<Index>(k));
    r = y - As * coef;
  }
  res.residual_norm = r.norm();
  return res;
}

/// Residual orthogonality to the selected atoms.
inline bool check_stationarity(const Mat& A, const Vec& y, const OmpResult& result) {
  if (result.support.empty()) {
    return true;
  }
  const Vec r = y - A * result.code;
  double worst = 0.0;
  for (Index l : result.support) worst = std::max(worst, std::abs(A.col(l).dot(r)));
  return worst <= 1e-8 * A.norm() * y.norm();
}

/// Euclidean projection of every column onto {s : ||s||_0 <= kappa, ||s||_inf <= b}.
inline Mat project_sparse_bounded(const Mat& S, Index kappa, double b) {
  if (!(b > 0.0)) throw ConfigError("project_sparse_bounded: b must be positive");
  const Index L = S.rows();
  const Index keep = std::max<Index>(0, std::min(kappa, L));
  Mat out = Mat::Zero(L, S.cols());
  std::vector<Index> idx(static_cast<std::size_t>(L));
  for (Index j = 0; j < S.cols(); ++j) {
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index c) { return std::abs(S(a, j)) > std::abs(S(c, j)); });
    for (Index k = 0; k < keep; ++k) {
      const Index l = idx[static_cast<std::size_t>(k)];
      out(l, j) = std::clamp(S(l, j), -b, b);
    }
  }
  return out;
}

/// 2 (B Psi)^T (B Psi S - C), the gradient of ||C - B Psi S||^2 in S.
inline Mat code_gradient(const SensingMatrix& phi, const Dictionary& psi, const SparseCodeMatrix& S,
                         const Mat& X, double alpha, double beta) {
  if (S.rows() != psi.atoms() || S.cols() != X.cols()) throw DimensionError("code_gradient: shape mismatch");
  const Stacked st = build_stacked(phi, X, alpha, beta);
  const Mat A = st.B * psi.matrix();
  return 2.0 * A.transpose() * (A * S - st.C);
}

struct CodeUpdate {
  SparseCodeMatrix codes;
  bool used_omp = false;
  double rho_prev = 0.0;
  double rho_new = 0.0;
};

/// One code step: accept the per-column OMP solution when it decreases the
/// objective by at least nu3 ||dS||^2 and respects the bound, otherwise take
/// a projected gradient step of length nu4.
inline CodeUpdate code_update(const SensingMatrix& phi, const Dictionary& psi, const SparseCodeMatrix& S_prev,
                              const Mat& X, const DesignConfig& cfg, bool allow_omp = true) {
  if (!cfg.b) throw ConfigError("code_update: coefficient bound b is unresolved");
  const double b = *cfg.b;
  if (S_prev.rows() != psi.atoms() || S_prev.cols() != X.cols())
    throw DimensionError("code_update: shape mismatch");
  if (!(cfg.nu4 > 0.0 && cfg.nu4 < 1.0 / cfg.lipschitz()))
    throw ConfigError("code_update: nu4 must satisfy 0 < nu4 < 1/L_cs");
  {
    FeasibilityReport rep;
    check_codes(S_prev, cfg.kappa, b, 0, rep, 0.0);
    if (!rep.ok()) throw InfeasibleError("code_update: previous codes are infeasible");
  }

  const Stacked st = build_stacked(phi, X, cfg.alpha, cfg.beta);
  const Mat A = st.B * psi.matrix();
  auto objective = [&](const Mat& S) { return (st.C - A * S).squaredNorm(); };

  CodeUpdate out;
  out.rho_prev = objective(S_prev);

  if (allow_omp) {
    const Index J = X.cols();
    Mat S_omp = Mat::Zero(S_prev.rows(), J);
    parallel_for(static_cast<std::size_t>(J), [&](std::size_t j) {
      const auto jj = static_cast<Index>(j);
      S_omp.col(jj) = omp(A, st.C.col(jj), cfg.kappa).code;
    });
    const double r_omp = objective(S_omp);
    const double zeta = out.rho_prev - r_omp;
    const double step = (S_prev - S_omp).squaredNorm();
    const double peak = S_omp.size() ? S_omp.cwiseAbs().maxCoeff() : 0.0;
    if (zeta >= cfg.nu3 * step && peak <= b) {
      out.codes = std::move(S_omp);
      out.used_omp = true;
      out.rho_new = r_omp;
      return out;
    }
  }

  const Mat grad = 2.0 * A.transpose() * (A * S_prev - st.C);
  out.codes = project_sparse_bounded(S_prev - cfg.nu4 * grad, cfg.kappa, b);
  out.rho_new = objective(out.codes);
  return out;
}

}  // namespace ccs

#endif
