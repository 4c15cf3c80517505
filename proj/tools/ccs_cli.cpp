// ccs: train, evaluate and run collaborative compressive sensing systems.
//
// Exit codes: 0 success, 1 other failure, 2 configuration or usage error,
// 3 I/O error, 4 invariant or feasibility violation.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ccs/ccs.hpp"

namespace fs = std::filesystem;
using namespace ccs;

namespace {

std::vector<fs::path> pgm_files(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("data directory not found: " + dir);
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (e.is_regular_file() && ext == ".pgm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no .pgm images in " + dir);
  return out;
}

Index patch_side(const DesignConfig& c) {
  const Index p = detail::exact_sqrt(c.N);
  if (p < 1) throw ConfigError("N must be a perfect square for image patches");
  return p;
}

Scheme parse_scheme(const std::string& s) {
  if (s == "prs") return Scheme::Prs;
  if (s == "standard") return Scheme::Standard;
  throw ConfigError("unknown scheme '" + s + "' (expected prs or standard)");
}

FusionRule parse_fusion(const std::string& flag, const CcsModel& model) {
  if (flag == "avg") return FusionRule::average(model.config.K);
  if (flag.rfind("full:", 0) == 0) {
    const Mat g = read_matrix_csv(flag.substr(5));
    const Index nk = model.config.N * model.config.K;
    if (g.rows() != nk || g.cols() != nk)
      throw ConfigError("covariance must be " + std::to_string(nk) + "x" + std::to_string(nk));
    return omega_full(NoiseCovariance(g, model.config.N, model.config.K));
  }
  throw ConfigError("unknown fusion '" + flag + "' (expected avg or full:<cov.csv>)");
}

// --------------------------------------------------------------------------

struct TrainArgs {
  std::string config, data, out, trace = "trace.csv";
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  const TrainSettings s = load_config(a.config);
  const DesignConfig& cfg = s.design;
  const Index p = patch_side(cfg);
  std::vector<Mat> images;
  for (const auto& f : pgm_files(a.data)) images.push_back(read_pgm(f.string()));
  const TrainingSet data = build_training_set(images, p, cfg.K, s.j0, cfg.seed);

  CsvWriter trace(a.trace, {"iter", "objective", "decrease", "dW2", "c1_dW2"});
  TrainOptions opt;
  opt.early_stop = s.early_stop;
  opt.on_iteration = [&](const IterationRecord& r) {
    trace.row({std::to_string(r.iter), format_real(r.objective), format_real(r.decrease), format_real(r.dw2),
               format_real(r.c1_dw2)});
    if (!a.quiet)
      std::cerr << "iter " << r.iter << "  objective " << format_real(r.objective) << "  dW2 " << format_real(r.dw2)
                << '\n';
  };
  const TrainResult res = train(cfg, data, std::nullopt, opt);
  save_model(a.out, res.model);
  return 0;
}

// --------------------------------------------------------------------------

struct EvalArgs {
  std::string model, fusion = "avg", scheme = "prs", out_dir, metrics = "metrics.csv", cov_out, corr_out;
  std::vector<std::string> images;
};

int run_eval(const EvalArgs& a) {
  const CcsModel model = load_model(a.model);
  const FusionRule rule = parse_fusion(a.fusion, model);
  const Scheme scheme = parse_scheme(a.scheme);
  const Index K = model.config.K, N = model.config.N;
  patch_side(model.config);

  std::vector<std::string> header{"image"};
  for (Index i = 1; i <= K; ++i) header.push_back("CS_" + std::to_string(i));
  header.push_back("fused");
  CsvWriter metrics(a.metrics, header);
  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);

  std::vector<Mat> errors;
  for (const auto& path : a.images) {
    const Mat img = read_pgm(path);
    const ImageEvaluation ev = evaluate_image(model, img, rule, scheme);
    std::vector<std::string> row{fs::path(path).filename().string()};
    for (double v : ev.branch_psnr) row.push_back(format_real(v));
    row.push_back(format_real(ev.fused_psnr));
    metrics.row(row);
    if (!a.out_dir.empty())
      write_pgm((fs::path(a.out_dir) / (fs::path(path).stem().string() + "_ccs.pgm")).string(), ev.fused);
    if (!a.cov_out.empty() || !a.corr_out.empty()) {
      const Index p = patch_side(model.config);
      const Mat ref = extract_patches(ev.reference, p).data;
      Mat e(N * K, ref.cols());
      for (Index i = 0; i < K; ++i)
        e.middleRows(i * N, N) = extract_patches(ev.branches[static_cast<std::size_t>(i)], p).data - ref;
      errors.push_back(std::move(e));
    }
  }
  if (!errors.empty()) {
    Index total = 0;
    for (const auto& e : errors) total += e.cols();
    Mat all(N * K, total);
    Index at = 0;
    for (const auto& e : errors) {
      all.middleCols(at, e.cols()) = e;
      at += e.cols();
    }
    const CovarianceEstimate est = estimate_covariance(all, N, K);
    if (!a.cov_out.empty()) write_matrix_csv(a.cov_out, est.covariance.matrix());
    if (!a.corr_out.empty()) write_matrix_csv(a.corr_out, est.correlation);
  }
  return 0;
}

// --------------------------------------------------------------------------

int run_compress(const std::string& model_path, const std::string& image, const std::string& out) {
  const CcsModel model = load_model(model_path);
  const Patches pt = extract_patches(read_pgm(image), patch_side(model.config));
  save_measurements(out, {compress_all(model.phi, pt.data), pt.grid});
  return 0;
}

int run_reconstruct(const std::string& model_path, const std::string& in, const std::string& out,
                    const std::string& fusion, const std::string& scheme) {
  const CcsModel model = load_model(model_path);
  const Measurements m = load_measurements(in);
  if (m.Y.rows() != model.config.M || m.grid.p * m.grid.p != model.config.N)
    throw DimensionError("measurements do not match the model");
  const CcsReconstruction rec = ccs_reconstruct_all(model, m.Y, parse_fusion(fusion, model), parse_scheme(scheme));
  write_pgm(out, assemble_patches(rec.fused, m.grid));
  return 0;
}

// --------------------------------------------------------------------------

struct MleArgs {
  Index n = 20, k = 5, j = 1000;
  double sigma = 0.1;
  std::uint64_t seed = 1;
  std::vector<double> sweep{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  std::string out = "mle_rmse.csv", sweep_out = "mle_sigma.csv", corr_out;
};

int run_demo_mle(const MleArgs& a) {
  const MleDemo d = run_mle_demo(a.n, a.k, a.j, a.sigma, a.seed);
  {
    CsvWriter w(a.out, {"i", "Ind_i", "MLE1_i", "MLE2_i", "MLE3_i"});
    for (const auto& r : d.rows)
      w.row({std::to_string(r.count), format_real(r.ind), format_real(r.mle1), format_real(r.mle2),
             format_real(r.mle3)});
  }
  if (!a.sweep_out.empty()) {
    CsvWriter w(a.sweep_out, {"sigma", "Ind_best", "MLE1", "MLE2", "MLE3"});
    for (const auto& r : run_mle_sigma_sweep(a.n, a.k, a.j, a.sweep, a.seed))
      w.row({format_real(r.sigma), format_real(r.ind), format_real(r.mle1), format_real(r.mle2), format_real(r.mle3)});
  }
  if (!a.corr_out.empty()) write_matrix_csv(a.corr_out, d.correlation);
  return 0;
}

// --------------------------------------------------------------------------

int run_diagnose(const std::string& model_path, Index trials, std::uint64_t seed) {
  const CcsModel model = load_model(model_path, false);
  const DesignConfig& c = model.config;
  const Index kappa = std::min(c.kappa, c.L0);
  std::cout << "tight_frame_error " << format_real(model.phi.tight_frame_error()) << '\n';
  std::cout << "welch_bound " << format_real(welch_bound(c.L0, c.N)) << '\n';
  std::cout << "welch_bound_equivalent " << format_real(welch_bound(c.L0, c.M)) << '\n';
  for (std::size_t i = 0; i < model.dictionaries.size(); ++i) {
    const Mat& psi = model.dictionaries[i].matrix();
    const Mat eq = model.phi.matrix() * psi;
    const RipEstimate rp = rip_estimate(psi, kappa, trials, seed + i);
    const RipEstimate re = rip_estimate(eq, kappa, trials, seed + i);
    std::cout << "branch " << i + 1 << '\n'
              << "  coherence " << format_real(mutual_coherence(psi)) << '\n'
              << "  rip_min " << format_real(rp.lo) << "  rip_max " << format_real(rp.hi) << '\n'
              << "  equivalent_coherence " << format_real(mutual_coherence(eq)) << '\n'
              << "  equivalent_rip_min " << format_real(re.lo) << "  equivalent_rip_max " << format_real(re.hi)
              << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative compressive sensing toolkit"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Learn a sensing matrix and K dictionaries from PGM images");
  train_cmd->add_option("-c,--config", ta.config, "key=value configuration file")->required();
  train_cmd->add_option("-d,--data", ta.data, "directory of training .pgm images")->required();
  train_cmd->add_option("-o,--out", ta.out, "output model file")->required();
  train_cmd->add_option("--trace", ta.trace, "per-iteration trace CSV")->capture_default_str();
  train_cmd->add_flag("-q,--quiet", ta.quiet, "suppress progress output");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Compress, reconstruct and score test images");
  eval_cmd->add_option("-m,--model", ea.model, "model file")->required();
  eval_cmd->add_option("images", ea.images, "test .pgm images")->required();
  eval_cmd->add_option("-f,--fusion", ea.fusion, "avg or full:<cov.csv>")->capture_default_str();
  eval_cmd->add_option("-s,--scheme", ea.scheme, "prs or standard")->capture_default_str();
  eval_cmd->add_option("--out-dir", ea.out_dir, "write fused reconstructions here");
  eval_cmd->add_option("--metrics", ea.metrics, "metrics CSV")->capture_default_str();
  eval_cmd->add_option("--cov-out", ea.cov_out, "write the estimated NK x NK error covariance");
  eval_cmd->add_option("--corr-out", ea.corr_out, "write the estimated error correlation");

  std::string c_model, c_image, c_out;
  auto* comp_cmd = app.add_subcommand("compress", "Measure every patch of an image");
  comp_cmd->add_option("-m,--model", c_model, "model file")->required();
  comp_cmd->add_option("-i,--image", c_image, "input .pgm")->required();
  comp_cmd->add_option("-o,--out", c_out, "output measurement file")->required();

  std::string r_model, r_in, r_out, r_fusion = "avg", r_scheme = "prs";
  auto* rec_cmd = app.add_subcommand("reconstruct", "Rebuild an image from a measurement file");
  rec_cmd->add_option("-m,--model", r_model, "model file")->required();
  rec_cmd->add_option("-i,--in", r_in, "measurement file")->required();
  rec_cmd->add_option("-o,--out", r_out, "output .pgm")->required();
  rec_cmd->add_option("-f,--fusion", r_fusion, "avg or full:<cov.csv>")->capture_default_str();
  rec_cmd->add_option("-s,--scheme", r_scheme, "prs or standard")->capture_default_str();

  MleArgs ma;
  auto* mle_cmd = app.add_subcommand("demo-mle", "Synthetic study of fused estimators under correlated noise");
  mle_cmd->add_option("--n", ma.n, "signal dimension")->capture_default_str();
  mle_cmd->add_option("--k", ma.k, "number of estimators")->capture_default_str();
  mle_cmd->add_option("--j", ma.j, "number of signals")->capture_default_str();
  mle_cmd->add_option("--sigma", ma.sigma, "noise scale")->capture_default_str();
  mle_cmd->add_option("--seed", ma.seed, "random seed")->capture_default_str();
  mle_cmd->add_option("--sweep", ma.sweep, "noise scales for the sweep CSV");
  mle_cmd->add_option("--out", ma.out, "RMSE versus estimator count")->capture_default_str();
  mle_cmd->add_option("--sweep-out", ma.sweep_out, "RMSE versus sigma (empty to skip)")->capture_default_str();
  mle_cmd->add_option("--corr-out", ma.corr_out, "noise correlation matrix CSV");

  std::string d_model;
  Index d_trials = 10000;
  std::uint64_t d_seed = 1;
  auto* diag_cmd = app.add_subcommand("diagnose", "Coherence and empirical isometry constants of a model");
  diag_cmd->add_option("-m,--model", d_model, "model file")->required();
  diag_cmd->add_option("--trials", d_trials, "sparse vectors sampled")->capture_default_str();
  diag_cmd->add_option("--seed", d_seed, "sampling seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*eval_cmd) return run_eval(ea);
    if (*comp_cmd) return run_compress(c_model, c_image, c_out);
    if (*rec_cmd) return run_reconstruct(r_model, r_in, r_out, r_fusion, r_scheme);
    if (*mle_cmd) return run_demo_mle(ma);
    if (*diag_cmd) return run_diagnose(d_model, d_trials, d_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return 4;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
