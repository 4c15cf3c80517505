#ifndef CCS_CORE_HPP
#define CCS_CORE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ccs/error.hpp"
#include "ccs/linalg.hpp"

namespace ccs {

namespace detail {
/// Integer square root of a perfect square, otherwise -1.
inline Index exact_sqrt(Index v) {
  if (v < 0) return -1;
  const auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v))));
  return r * r == v ? r : -1;
}
}  // namespace detail

/// Hyperparameters of a CCS design.
struct DesignConfig {
  Index M = 20;
  Index N = 64;
  Index L0 = 100;
  Index K = 5;
  Index kappa = 4;
  double alpha = 0.2;
  double beta = 1.0;
  double nu1 = 1e-4;
  double nu2 = 1e-4;
  double nu3 = 1e-4;
  double nu4 = 1.0 / 660.0;
  std::optional<double> b;  // unset: resolved from data as 10 * max |x|
  int n_ite = 30;
  std::uint64_t seed = 0;

  /// Lipschitz constant of the code gradient, 2(1 + alpha + beta) L0.
  double lipschitz() const { return 2.0 * (1.0 + alpha + beta) * static_cast<double>(L0); }

  /// Step size 1 / (3 (alpha + beta + 1) L0).
  double default_step() const { return 1.0 / (1.5 * lipschitz()); }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (M < 1) fail("M must be at least 1");
    if (!(M < N)) fail("M must be smaller than N");
    if (!(N <= L0)) fail("N must not exceed L0");
    if (K < 1) fail("K must be at least 1");
    if (kappa < 1) fail("kappa must be at least 1");
    if (kappa > M) fail("kappa must not exceed M");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) fail("alpha and beta must be nonnegative");
    if (!(nu1 > 0.0) || !(nu2 > 0.0) || !(nu3 > 0.0)) fail("nu1, nu2, nu3 must be positive");
    if (!(nu4 > 0.0)) fail("nu4 must be positive");
    if (!(nu4 < 1.0 / lipschitz())) {
      std::ostringstream os;
      os.precision(17);
      os << "nu4 = " << nu4 << " violates the step bound nu4 < 1/L_cs with L_cs = 2(1+alpha+beta)L0 = "
         << lipschitz() << " (limit " << 1.0 / lipschitz() << ")";
      fail(os.str());
    }
    if (b && !(*b > 0.0)) fail("b must be positive");
    if (n_ite < 0) fail("n_ite must be nonnegative");
  }

  /// M=20, N=64, L0=100, kappa=4, K=5, alpha=0.2, beta=1, nu1..nu3=1e-4, nu4=1/660, 30 iterations.
  static DesignConfig reference_defaults() {
    DesignConfig c;
    c.nu4 = c.default_step();
    return c;
  }
};

/// M x N sensing matrix. Tight-frame structure is checked, not enforced.
class SensingMatrix {
 public:
  SensingMatrix() = default;
  explicit SensingMatrix(Mat entries) : m_(std::move(entries)) {
    if (m_.rows() < 1 || m_.rows() > m_.cols())
      throw DimensionError("SensingMatrix: expected 1 <= rows <= cols");
    if (!m_.allFinite()) throw NumericalError("SensingMatrix: non-finite entries");
  }

  const Mat& matrix() const { return m_; }
  Index rows() const { return m_.rows(); }
  Index cols() const { return m_.cols(); }

  /// ||Phi Phi^T - I||_F
  double tight_frame_error() const {
    return (m_ * m_.transpose() - Mat::Identity(m_.rows(), m_.rows())).norm();
  }

 private:
  Mat m_;
};

/// N x L0 dictionary with unit-norm columns.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(Mat entries, double tol = 1e-8) : m_(std::move(entries)) {
    if (m_.rows() < 1 || m_.cols() < 1) throw DimensionError("Dictionary: empty matrix");
    if (!m_.allFinite()) throw NumericalError("Dictionary: non-finite entries");
    for (Index j = 0; j < m_.cols(); ++j) {
      if (std::abs(m_.col(j).norm() - 1.0) > tol)
        throw InfeasibleError("Dictionary: column " + std::to_string(j) + " is not unit norm");
    }
  }

  static Dictionary normalized(Mat entries) {
    for (Index j = 0; j < entries.cols(); ++j) {
      const double n = entries.col(j).norm();
      if (n == 0.0) throw NumericalError("Dictionary: zero column cannot be normalized");
      entries.col(j) /= n;
    }
    return Dictionary(std::move(entries));
  }

  const Mat& matrix() const { return m_; }
  Index rows() const { return m_.rows(); }
  Index atoms() const { return m_.cols(); }

 private:
  Mat m_;
};

/// L0 x J code matrix; sparsity and bound are checked by check_feasible.
using SparseCodeMatrix = Mat;

struct TrainingSet {
  std::vector<Mat> blocks;

  TrainingSet() = default;
  explicit TrainingSet(std::vector<Mat> b) : blocks(std::move(b)) {
    if (blocks.empty()) throw DimensionError("TrainingSet: no blocks");
    for (const auto& x : blocks) {
      if (x.rows() != blocks.front().rows() || x.cols() != blocks.front().cols())
        throw DimensionError("TrainingSet: blocks differ in shape");
      if (!x.allFinite()) throw NumericalError("TrainingSet: non-finite data");
    }
  }

  Index branches() const { return static_cast<Index>(blocks.size()); }
  Index dim() const { return blocks.empty() ? 0 : blocks.front().rows(); }
  Index samples() const { return blocks.empty() ? 0 : blocks.front().cols(); }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : blocks)
      if (x.size() > 0) m = std::max(m, x.cwiseAbs().maxCoeff());
    return m;
  }
};

struct CcsModel {
  SensingMatrix phi;
  std::vector<Dictionary> dictionaries;
  DesignConfig config;

  Index branches() const { return static_cast<Index>(dictionaries.size()); }

  void validate_dimensions() const {
    if (phi.rows() != config.M || phi.cols() != config.N)
      throw DimensionError("CcsModel: sensing matrix shape does not match config");
    if (static_cast<Index>(dictionaries.size()) != config.K)
      throw DimensionError("CcsModel: dictionary count does not match K");
    for (const auto& d : dictionaries)
      if (d.rows() != config.N || d.atoms() != config.L0)
        throw DimensionError("CcsModel: dictionary shape does not match config");
  }
};

struct TrainState {
  SensingMatrix phi;
  std::vector<Dictionary> dictionaries;
  std::vector<SparseCodeMatrix> codes;
  int iteration = 0;
  std::vector<double> objective_trace;
  std::vector<double> change_trace;
};

struct Stacked {
  Mat B;  // (2N+M) x N
  Mat C;  // (2N+M) x J
};

/// B = [I; sqrt(alpha) Phi; sqrt(beta)(I - Phi^T Phi)].
inline Mat stacked_operator(const SensingMatrix& phi, double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be nonnegative");
  const Mat& p = phi.matrix();
  const Index n = p.cols(), m = p.rows();
  Mat b(2 * n + m, n);
  b.topRows(n).setIdentity();
  b.middleRows(n, m) = std::sqrt(alpha) * p;
  b.bottomRows(n) = std::sqrt(beta) * (Mat::Identity(n, n) - p.transpose() * p);
  return b;
}

inline Stacked build_stacked(const SensingMatrix& phi, const Mat& x, double alpha, double beta) {
  const Mat& p = phi.matrix();
  if (x.rows() != p.cols()) throw DimensionError("build_stacked: X rows must equal N");
  const Index n = p.cols(), m = p.rows();
  Stacked s;
  s.B = stacked_operator(phi, alpha, beta);
  s.C = Mat::Zero(2 * n + m, x.cols());
  s.C.topRows(n) = x;
  s.C.middleRows(n, m) = std::sqrt(alpha) * (p * x);
  return s;
}

/// rho = ||X - Psi S||^2 + alpha ||Phi (X - Psi S)||^2 + beta ||(I - Phi^T Phi) Psi S||^2.
inline double rho(const SensingMatrix& phi, const Dictionary& psi, const SparseCodeMatrix& s,
                  const Mat& x, double alpha, double beta) {
  const Mat& p = phi.matrix();
  const Mat& d = psi.matrix();
  if (d.rows() != p.cols() || x.rows() != p.cols() || s.rows() != d.cols() || s.cols() != x.cols())
    throw DimensionError("rho: inconsistent dimensions");
  const Mat ps = d * s;
  const Mat r = x - ps;
  const Mat q = ps - p.transpose() * (p * ps);
  return r.squaredNorm() + alpha * (p * r).squaredNorm() + beta * q.squaredNorm();
}

inline double total_objective(const TrainState& state, const TrainingSet& data, const DesignConfig& cfg) {
  if (state.dictionaries.size() != data.blocks.size() || state.codes.size() != data.blocks.size())
    throw DimensionError("total_objective: branch count mismatch");
  double f = 0.0;
  for (std::size_t i = 0; i < data.blocks.size(); ++i)
    f += rho(state.phi, state.dictionaries[i], state.codes[i], data.blocks[i], cfg.alpha, cfg.beta);
  return f;
}

struct Violation {
  enum class Kind { TightFrame, UnitNorm, Sparsity, Bound, Shape };
  Kind kind;
  Index branch = -1;  // -1 for the sensing matrix
  Index index = -1;   // column, where applicable
  double magnitude = 0.0;
};

inline const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::TightFrame: return "tight-frame";
    case Violation::Kind::UnitNorm: return "unit-norm";
    case Violation::Kind::Sparsity: return "sparsity";
    case Violation::Kind::Bound: return "bound";
    case Violation::Kind::Shape: return "shape";
  }
  return "unknown";
}

struct FeasibilityReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  bool has(Violation::Kind k) const {
    for (const auto& v : violations)
      if (v.kind == k) return true;
    return false;
  }

  std::string summary() const {
    if (ok()) return "feasible";
    std::ostringstream os;
    os << violations.size() << " violation(s):";
    for (std::size_t i = 0; i < violations.size() && i < 5; ++i) {
      const auto& v = violations[i];
      os << ' ' << to_string(v.kind) << "[branch " << v.branch << ", index " << v.index
         << ", magnitude " << v.magnitude << ']';
    }
    return os.str();
  }
};

/// Appends sparsity and bound violations of one code matrix.
inline void check_codes(const SparseCodeMatrix& s, Index kappa, double b, Index branch,
                        FeasibilityReport& report, double tol = 1e-8) {
  for (Index j = 0; j < s.cols(); ++j) {
    Index nnz = 0;
    double peak = 0.0;
    for (Index l = 0; l < s.rows(); ++l) {
      if (s(l, j) != 0.0) ++nnz;
      peak = std::max(peak, std::abs(s(l, j)));
    }
    if (nnz > kappa)
      report.violations.push_back({Violation::Kind::Sparsity, branch, j, static_cast<double>(nnz - kappa)});
    if (peak - b > tol || !std::isfinite(peak))
      report.violations.push_back({Violation::Kind::Bound, branch, j, peak - b});
  }
}

inline FeasibilityReport check_feasible(const TrainState& state, const DesignConfig& cfg, double tol = 1e-8) {
  FeasibilityReport r;
  const double tf = state.phi.tight_frame_error();
  if (!(tf <= tol)) r.violations.push_back({Violation::Kind::TightFrame, -1, -1, tf});
  const double b = cfg.b.value_or(std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < state.dictionaries.size(); ++i) {
    const Mat& d = state.dictionaries[i].matrix();
    const auto bi = static_cast<Index>(i);
    for (Index j = 0; j < d.cols(); ++j) {
      const double dev = std::abs(d.col(j).norm() - 1.0);
      if (!(dev <= tol)) r.violations.push_back({Violation::Kind::UnitNorm, bi, j, dev});
    }
  }
  for (std::size_t i = 0; i < state.codes.size(); ++i)
    check_codes(state.codes[i], cfg.kappa, b, static_cast<Index>(i), r, tol);
  return r;
}

/// c1 = min{nu1, nu2, nu3, (1/nu4 - L_cs) / 2}.
inline double decrease_constant_c1(const DesignConfig& cfg) {
  const double lcs = cfg.lipschitz();
  if (!(cfg.nu4 > 0.0) || !(cfg.nu4 < 1.0 / lcs))
    throw ConfigError("decrease_constant_c1: nu4 must satisfy 0 < nu4 < 1/L_cs");
  return std::min({cfg.nu1, cfg.nu2, cfg.nu3, 0.5 * (1.0 / cfg.nu4 - lcs)});
}

}  // namespace ccs

#endif
