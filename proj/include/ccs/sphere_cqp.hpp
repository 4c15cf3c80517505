#ifndef CCS_SPHERE_CQP_HPP
#define CCS_SPHERE_CQP_HPP

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ccs/error.hpp"
#include "ccs/linalg.hpp"

namespace ccs {

/// minimize h^T D h - 2 d^T h subject to ||h|| = 1.
struct CqpProblem {
  Mat D;
  Vec d;
};

struct CqpSolution {
  Vec h;
  double lambda = 0.0;
  double objective = 0.0;
  /// Every KKT candidate considered, as (lambda, xi_tilde(lambda)).
  std::vector<std::pair<double, double>> candidates;
};

/// g(lambda) = sum_n dbar_n^2 / (sigma_n - lambda)^2
inline double secular_g(double lambda, const Vec& sigmas, const Vec& dbar) {
  if (sigmas.size() != dbar.size()) throw DimensionError("secular_g: size mismatch");
  double g = 0.0;
  for (Index n = 0; n < sigmas.size(); ++n) {
    if (dbar(n) == 0.0) continue;
    const double diff = sigmas(n) - lambda;
    if (diff == 0.0) throw NumericalError("secular_g: evaluated at a pole");
    g += dbar(n) * dbar(n) / (diff * diff);
  }
  return g;
}

/// xi_tilde(lambda) = sum_n dbar_n^2 / (lambda - sigma_n) + lambda
inline double xi_tilde(double lambda, const Vec& sigmas, const Vec& dbar) {
  if (sigmas.size() != dbar.size()) throw DimensionError("xi_tilde: size mismatch");
  double x = lambda;
  for (Index n = 0; n < sigmas.size(); ++n) {
    if (dbar(n) == 0.0) continue;
    const double diff = lambda - sigmas(n);
    if (diff == 0.0) throw NumericalError("xi_tilde: evaluated at a pole");
    x += dbar(n) * dbar(n) / diff;
  }
  return x;
}

namespace detail {

struct Pole {
  double sigma;  // representative eigenvalue
  double mass;   // sqrt of summed dbar^2 over the cluster
  Index begin;   // member range [begin, end) in the descending spectrum
  Index end;
};

constexpr int kMaxBisection = 200;
constexpr double kBisectionTol = 1e-13;

/// Secular function over active poles, evaluated at lambda = sigma[ref] + sgn * t.
/// Offsets from the reference pole keep differences accurate near it.
class Secular {
 public:
  explicit Secular(std::vector<Pole> active) : p_(std::move(active)) {}

  std::size_t size() const { return p_.size(); }
  const Pole& operator[](std::size_t i) const { return p_[i]; }

  double diff(std::size_t c, std::size_t ref, double sgn, double t) const {
    return c == ref ? -sgn * t : (p_[c].sigma - p_[ref].sigma) - sgn * t;
  }

  double g(std::size_t ref, double sgn, double t) const {
    double s = 0.0;
    for (std::size_t c = 0; c < p_.size(); ++c) {
      const double dd = diff(c, ref, sgn, t);
      s += p_[c].mass * p_[c].mass / (dd * dd);
    }
    return s;
  }

  /// d g / d lambda
  double slope(std::size_t ref, double sgn, double t) const {
    double s = 0.0;
    for (std::size_t c = 0; c < p_.size(); ++c) {
      const double dd = diff(c, ref, sgn, t);
      s += 2.0 * p_[c].mass * p_[c].mass / (dd * dd * dd);
    }
    return s;
  }

  double xi(std::size_t ref, double sgn, double t) const {
    double x = p_[ref].sigma + sgn * t;
    for (std::size_t c = 0; c < p_.size(); ++c) x -= p_[c].mass * p_[c].mass / diff(c, ref, sgn, t);
    return x;
  }

 private:
  std::vector<Pole> p_;
};

/// Root of g = 1 for t in [lo, hi], where g is decreasing in t, g(lo) >= 1 >= g(hi).
inline double bisect_root(const Secular& s, std::size_t ref, double sgn, double lo, double hi) {
  for (int it = 0; it < kMaxBisection; ++it) {
    if (hi - lo <= kBisectionTol * hi) return 0.5 * (lo + hi);
    const double mid = (lo > 0.0 && hi > 4.0 * lo) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (s.g(ref, sgn, mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  throw NumericalError("sphere_cqp: secular bisection did not converge");
}

/// Minimizer of the convex g between active poles `upper` and `upper + 1`,
/// returned as the offset above the lower pole.
inline double bisect_valley(const Secular& s, std::size_t upper, double width) {
  const std::size_t lower = upper + 1;
  double lo = 0.0, hi = width;
  for (int it = 0; it < kMaxBisection; ++it) {
    if (hi - lo <= kBisectionTol * width) return 0.5 * (lo + hi);
    const double mid = 0.5 * (lo + hi);
    if (s.slope(lower, 1.0, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  throw NumericalError("sphere_cqp: valley bisection did not converge");
}

}  // namespace detail

/// Solves the sphere-constrained problem given D = U diag(sigma) U^T with sigma descending.
inline CqpSolution solve_sphere_cqp_spectral(const Vec& sigma, const Mat& U, const Vec& d) {
  const Index n = sigma.size();
  if (n < 1 || U.rows() != n || U.cols() != n || d.size() != n)
    throw DimensionError("sphere_cqp: inconsistent dimensions");
  if (!sigma.allFinite() || !d.allFinite()) throw NumericalError("sphere_cqp: non-finite input");

  const double dnorm = d.norm();
  const double scale = sigma.cwiseAbs().maxCoeff();
  CqpSolution sol;
  if (dnorm <= 1e-12 * scale || dnorm == 0.0) {
    sol.h = U.col(n - 1);
    sol.lambda = sigma(n - 1);
    sol.objective = sigma(n - 1) - 2.0 * d.dot(sol.h);
    sol.candidates.emplace_back(sol.lambda, sol.objective);
    return sol;
  }

  const Vec dbar = U.transpose() * d;
  const double merge_tol = 1e-12 * scale;
  const double zero_mass = 1e-14 * dbar.norm();

  std::vector<detail::Pole> all;
  for (Index k = 0; k < n;) {
    Index e = k + 1;
    while (e < n && sigma(k) - sigma(e) <= merge_tol) ++e;
    double m2 = 0.0, sum = 0.0;
    for (Index j = k; j < e; ++j) {
      m2 += dbar(j) * dbar(j);
      sum += sigma(j);
    }
    all.push_back({sum / static_cast<double>(e - k), std::sqrt(m2), k, e});
    k = e;
  }
  std::vector<detail::Pole> active, inactive;
  for (const auto& p : all) (p.mass > zero_mass ? active : inactive).push_back(p);
  const detail::Secular sec(active);
  const std::size_t na = sec.size();
  double active_norm = 0.0;
  for (std::size_t c = 0; c < na; ++c) active_norm += sec[c].mass * sec[c].mass;
  active_norm = std::sqrt(active_norm);

  // Candidate in rotated coordinates.
  struct Candidate {
    double lambda;
    double xi;
    Vec hbar;
  };
  std::vector<Candidate> cands;

  auto from_root = [&](std::size_t ref, double sgn, double t) {
    Vec hb = Vec::Zero(n);
    for (std::size_t c = 0; c < na; ++c) {
      const double dd = sec.diff(c, ref, sgn, t);
      for (Index j = sec[c].begin; j < sec[c].end; ++j) hb(j) = dbar(j) / dd;
    }
    cands.push_back({sec[ref].sigma + sgn * t, sec.xi(ref, sgn, t), hb});
  };

  // Outer intervals: one root each.
  from_root(0, 1.0, detail::bisect_root(sec, 0, 1.0, sec[0].mass, active_norm));
  {
    const std::size_t last = na - 1;
    from_root(last, -1.0, detail::bisect_root(sec, last, -1.0, sec[last].mass, active_norm));
  }
  // Inner intervals: g is convex, zero or two roots.
  for (std::size_t c = 0; c + 1 < na; ++c) {
    const double width = sec[c].sigma - sec[c + 1].sigma;
    const double tstar = detail::bisect_valley(sec, c, width);
    if (sec.g(c + 1, 1.0, tstar) > 1.0) continue;
    const double lo_a = std::min(sec[c + 1].mass, tstar);
    from_root(c + 1, 1.0, detail::bisect_root(sec, c + 1, 1.0, lo_a, tstar));
    const double ustar = width - tstar;
    const double lo_b = std::min(sec[c].mass, ustar);
    from_root(c, -1.0, detail::bisect_root(sec, c, -1.0, lo_b, ustar));
  }
  // Hard case: lambda at a pole whose eigenspace carries no mass.
  for (const auto& p : inactive) {
    double w = 0.0, xi = p.sigma;
    Vec hb = Vec::Zero(n);
    for (std::size_t c = 0; c < na; ++c) {
      const double dd = sec[c].sigma - p.sigma;
      w += sec[c].mass * sec[c].mass / (dd * dd);
      xi -= sec[c].mass * sec[c].mass / dd;
      for (Index j = sec[c].begin; j < sec[c].end; ++j) hb(j) = dbar(j) / dd;
    }
    if (w > 1.0) continue;
    hb(p.begin) = std::sqrt(1.0 - w);
    cands.push_back({p.sigma, xi, hb});
  }

  std::size_t best = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    sol.candidates.emplace_back(cands[i].lambda, cands[i].xi);
    if (cands[i].xi < cands[best].xi) best = i;
  }
  Vec hb = cands[best].hbar;
  hb /= hb.norm();
  sol.h = U * hb;
  sol.lambda = cands[best].lambda;
  sol.objective = hb.dot(sigma.cwiseProduct(hb)) - 2.0 * dbar.dot(hb);
  return sol;
}

/// Global minimizer of h^T D h - 2 d^T h on the unit sphere.
inline CqpSolution solve_sphere_cqp(const CqpProblem& p) {
  if (p.D.rows() != p.D.cols() || p.D.rows() != p.d.size())
    throw DimensionError("solve_sphere_cqp: inconsistent dimensions");
  if (!p.D.allFinite() || !p.d.allFinite()) throw NumericalError("solve_sphere_cqp: non-finite input");
  const SymEig e = sym_eig(p.D);
  return solve_sphere_cqp_spectral(e.values, e.vectors, p.d);
}

}  // namespace ccs

#endif
