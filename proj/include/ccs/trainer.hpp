#ifndef CCS_TRAINER_HPP
#define CCS_TRAINER_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ccs/core.hpp"
#include "ccs/dictionary_update.hpp"
#include "ccs/parallel.hpp"
#include "ccs/sensing_update.hpp"
#include "ccs/sparse_coding.hpp"

namespace ccs {

/// Separable overcomplete DCT: kron(T, T) with T(k, j) = cos(k j pi / sqrt(L0)), unit columns.
inline Dictionary init_dct_dictionary(Index N, Index L0) {
  const Index p = detail::exact_sqrt(N), q = detail::exact_sqrt(L0);
  if (N < 1 || L0 < 1 || p < 0 || q < 0) throw ConfigError("init_dct_dictionary: N and L0 must be perfect squares");
  const double pi = std::acos(-1.0);
  Mat t(p, q);
  for (Index k = 0; k < p; ++k)
    for (Index j = 0; j < q; ++j)
      t(k, j) = std::cos(static_cast<double>(k) * static_cast<double>(j) * pi / static_cast<double>(q));
  for (Index j = 0; j < q; ++j) t.col(j) /= t.col(j).norm();
  Mat d(N, L0);
  for (Index a = 0; a < q; ++a)
    for (Index b = 0; b < q; ++b)
      for (Index r = 0; r < p; ++r)
        for (Index s = 0; s < p; ++s) d(r * p + s, a * q + b) = t(r, a) * t(s, b);
  return Dictionary::normalized(std::move(d));
}

/// Rows are the leading M left singular vectors of psi0.
inline SensingMatrix init_sensing(const Dictionary& psi0, Index M) {
  const Mat& d = psi0.matrix();
  if (M < 1 || M > d.rows()) throw ConfigError("init_sensing: M must lie in [1, N]");
  const SymEig e = sym_eig(d * d.transpose());
  if (!(e.values(M - 1) > 1e-12 * e.values(0))) throw NumericalError("init_sensing: dictionary rank is below M");
  return SensingMatrix(e.vectors.leftCols(M).transpose());
}

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double decrease = 0.0;
  double dw2 = 0.0;
  double c1_dw2 = 0.0;
  std::vector<bool> used_omp;
  std::string constraints = "feasible";
};

struct TrainTrace {
  double c1 = 0.0;
  std::vector<IterationRecord> records;
};

struct TrainOptions {
  bool early_stop = false;
  std::function<void(const IterationRecord&)> on_iteration;
};

struct TrainResult {
  CcsModel model;
  TrainTrace trace;
  TrainState state;
};

/// Per-column OMP on the plain dictionary, projected onto the feasible set.
inline Mat initial_codes(const Dictionary& psi, const Mat& X, Index kappa, double b) {
  Mat s(psi.atoms(), X.cols());
  parallel_for(static_cast<std::size_t>(X.cols()), [&](std::size_t j) {
    const auto jj = static_cast<Index>(j);
    s.col(jj) = omp(psi.matrix(), X.col(jj), kappa).code;
  });
  return project_sparse_bounded(s, kappa, b);
}

/// Alternating minimization over the sensing matrix, the K dictionaries and
/// their codes. Each iteration is checked for sufficient decrease and
/// feasibility; a failure throws InvariantViolation.
inline TrainResult train(DesignConfig cfg, const TrainingSet& data, const std::optional<CcsModel>& init = std::nullopt,
                         const TrainOptions& opt = {}) {
  cfg.validate();
  if (data.branches() != cfg.K || data.dim() != cfg.N) throw DimensionError("train: data does not match config");
  if (!cfg.b) {
    const double peak = data.max_abs();
    if (!(peak > 0.0)) throw ConfigError("train: cannot derive b from all-zero data");
    cfg.b = 10.0 * peak;
  }
  const double b = *cfg.b;
  const double c1 = decrease_constant_c1(cfg);
  const auto K = static_cast<std::size_t>(cfg.K);

  TrainState st;
  if (init) {
    init->validate_dimensions();
    if (init->config.M != cfg.M || init->config.N != cfg.N || init->config.L0 != cfg.L0 || init->config.K != cfg.K)
      throw DimensionError("train: initial model does not match config");
    st.phi = init->phi;
    st.dictionaries = init->dictionaries;
  } else {
    const Dictionary psi0 = init_dct_dictionary(cfg.N, cfg.L0);
    st.phi = init_sensing(psi0, cfg.M);
    st.dictionaries.assign(K, psi0);
  }
  st.codes.resize(K);
  for (std::size_t i = 0; i < K; ++i) st.codes[i] = initial_codes(st.dictionaries[i], data.blocks[i], cfg.kappa, b);

  TrainResult out;
  out.trace.c1 = c1;
  double f = total_objective(st, data, cfg);
  st.objective_trace.push_back(f);
  {
    IterationRecord r0;
    r0.objective = f;
    r0.constraints = check_feasible(st, cfg).summary();
    out.trace.records.push_back(r0);
    if (opt.on_iteration) opt.on_iteration(r0);
  }

  std::vector<int> rejections(K, 0);
  int quiet = 0;
  for (int k = 1; k <= cfg.n_ite; ++k) {
    std::vector<Branch> br;
    for (std::size_t i = 0; i < K; ++i) br.push_back({&st.dictionaries[i], &st.codes[i], &data.blocks[i]});
    const SensingMatrix phi = update_sensing(br, st.phi, cfg.alpha, cfg.beta, cfg.nu1);

    std::vector<Dictionary> dicts(K);
    std::vector<Mat> codes(K);
    std::vector<char> omp_used(K, 0);
    parallel_for(K, [&](std::size_t i) {
      dicts[i] = update_dictionary(phi, st.dictionaries[i], st.codes[i], data.blocks[i], cfg.alpha, cfg.beta, cfg.nu2);
      CodeUpdate cu = code_update(phi, dicts[i], st.codes[i], data.blocks[i], cfg, rejections[i] < 2);
      codes[i] = std::move(cu.codes);
      omp_used[i] = cu.used_omp ? 1 : 0;
    });

    double dw2 = (phi.matrix() - st.phi.matrix()).squaredNorm();
    for (std::size_t i = 0; i < K; ++i) {
      dw2 += (dicts[i].matrix() - st.dictionaries[i].matrix()).squaredNorm();
      dw2 += (codes[i] - st.codes[i]).squaredNorm();
      if (rejections[i] < 2) rejections[i] = omp_used[i] ? 0 : rejections[i] + 1;
    }
    st.phi = phi;
    st.dictionaries = std::move(dicts);
    st.codes = std::move(codes);
    st.iteration = k;

    const double f_new = total_objective(st, data, cfg);
    IterationRecord rec;
    rec.iter = k;
    rec.objective = f_new;
    rec.decrease = f - f_new;
    rec.dw2 = dw2;
    rec.c1_dw2 = c1 * dw2;
    for (std::size_t i = 0; i < K; ++i) rec.used_omp.push_back(omp_used[i] != 0);
    const FeasibilityReport rep = check_feasible(st, cfg);
    rec.constraints = rep.summary();
    st.objective_trace.push_back(f_new);
    st.change_trace.push_back(dw2);
    out.trace.records.push_back(rec);
    if (opt.on_iteration) opt.on_iteration(rec);

    if (!rep.ok()) throw InvariantViolation("train: iteration " + std::to_string(k) + " left the feasible set: " + rep.summary());
    if (rec.decrease < rec.c1_dw2 - 1e-9 * (1.0 + f)) {
      std::ostringstream os;
      os.precision(17);
      os << "train: sufficient decrease failed at iteration " << k << ": decrease " << rec.decrease
         << " < c1*||dW||^2 = " << rec.c1_dw2;
      throw InvariantViolation(os.str());
    }
    f = f_new;
    if (opt.early_stop) {
      quiet = dw2 < 1e-12 ? quiet + 1 : 0;
      if (quiet >= 3) break;
    }
  }

  out.model.phi = st.phi;
  out.model.dictionaries = st.dictionaries;
  out.model.config = cfg;
  out.state = std::move(st);
  return out;
}

}  // namespace ccs

#endif
