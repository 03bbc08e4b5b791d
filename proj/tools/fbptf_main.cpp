// Command-line front end. Exit codes: 0 success, 1 invalid input, 2 numerical failure.

#include <cstdlib>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "fbptf/config.hpp"
#include "fbptf/dataset.hpp"
#include "fbptf/experiment.hpp"
#include "fbptf/image.hpp"
#include "fbptf/io.hpp"
#include "fbptf/l21.hpp"
#include "fbptf/model_io.hpp"
#include "fbptf/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fbptf;

namespace {

// FBPTF_OUTPUT_ROOT relocates relative output paths; nothing else is read
// from the environment.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* root = std::getenv("FBPTF_OUTPUT_ROOT"); root && *root) return fs::path(root) / path;
  }
  return path;
}

Vector parse_triplet(const std::string& s, const char* what) {
  auto cells = io::split_csv_line(s);
  Vector v(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) v[static_cast<Eigen::Index>(i)] = io::parse_cell(cells[i], what, 1, i + 1);
  return v;
}

struct ExperimentArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string dataset;
  std::string out;
};

void add_experiment_options(CLI::App* cmd, ExperimentArgs& a) {
  cmd->add_option("--config", a.config, "key = value settings file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.sets, "override one setting, e.g. --set train.sweeps=50");
  cmd->add_option("--dataset", a.dataset, "dataset directory (overrides the config)");
  cmd->add_option("--out", a.out, "output directory (overrides the config)");
}

harness::ExperimentConfig build_config(const ExperimentArgs& a) {
  std::optional<fs::path> file;
  if (!a.config.empty()) file = a.config;
  harness::ExperimentConfig cfg = harness::load_config(file, a.sets);
  if (!a.dataset.empty()) cfg.dataset = a.dataset;
  if (!a.out.empty()) cfg.output = a.out;
  if (!cfg.output.empty()) cfg.output = output_path(cfg.output.string());
  return cfg;
}

void print_summary(const harness::ExperimentReport& r, const fs::path& out) {
  for (const auto& f : r.folds) {
    std::cout << "fold " << f.fold << ": test RMSE " << io::format_double(f.test_rmse);
    if (f.selected_sweep) {
      std::cout << " (validation-selected sweep " << *f.selected_sweep << ": " << io::format_double(*f.selected_test_rmse)
                << ")";
    }
    std::cout << "\n";
  }
  std::cout << harness::to_string(r.model) << " mean test RMSE " << io::format_double(r.mean_test_rmse) << " over "
            << r.folds.size() << " fold(s); report in " << (out / "report.json").string() << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Feature-conditioned Bayesian tensor factorization for photo enhancement parameters"};
  app.require_subcommand(1);

  // generate-synthetic
  synthetic::SyntheticConfig sc;
  std::string syn_out;
  double norm_scale = -1.0;
  auto* gen = app.add_subcommand("generate-synthetic", "write the synthetic benchmark as a dataset directory");
  gen->add_option("--out", syn_out, "output dataset directory")->required();
  gen->add_option("--n", sc.n, "image count")->capture_default_str();
  gen->add_option("--l", sc.l, "feature length")->capture_default_str();
  gen->add_option("--m", sc.m, "versions per image")->capture_default_str();
  gen->add_option("--eta", sc.eta, "mixing weight of the nonlinear term")->capture_default_str();
  gen->add_option("--norm-scale", norm_scale, "multiplier on ||F_i|| (default 1/sqrt(l))");
  gen->add_option("--seed", sc.seed, "generator seed")->capture_default_str();

  // train
  ExperimentArgs train_args;
  std::string model_out;
  auto* train = app.add_subcommand("train", "train FBPTF on every image of a dataset and save the model");
  add_experiment_options(train, train_args);
  train->add_option("--model-out", model_out, "model directory to write")->required();

  // predict
  std::string pred_model, pred_features, pred_params, pred_out;
  auto* predict = app.add_subcommand("predict", "predict version parameters for new images");
  predict->add_option("--model", pred_model, "model directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--features", pred_features, "features CSV, one image per row")->required()->check(CLI::ExistingFile);
  predict->add_option("--params", pred_params, "low-quality parameters CSV, one image per row")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "predictions CSV (stdout when omitted)");

  // enhance
  std::string enh_image, enh_model, enh_out, enh_lambda, enh_zeta;
  harness::EnhanceOptions enh_opt;
  bool enh_no_clip = false;
  auto* enh = app.add_subcommand("enhance", "predict, clip and apply M parameter sets to one image");
  enh->add_option("--image", enh_image, "PNG or PPM input")->required()->check(CLI::ExistingFile);
  enh->add_option("--model", enh_model, "model directory")->required()->check(CLI::ExistingDirectory);
  enh->add_option("--out", enh_out, "output directory")->required();
  enh->add_flag("--no-clip", enh_no_clip, "skip the clipping envelope");
  enh->add_option("--lambda", enh_lambda, "upward clip multipliers, e.g. 0.4,0.4,0.05");
  enh->add_option("--zeta", enh_zeta, "downward clip multipliers, e.g. 0.3,0.3,0.01");
  enh->add_option("--tol", enh_opt.tol, "parameter tolerance when applying")->capture_default_str();
  enh->add_option("--max-iter", enh_opt.max_iter, "rounds / bisection steps per axis")->capture_default_str();

  // evaluate
  ExperimentArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "run a split experiment and write report.json");
  add_experiment_options(eval, eval_args);

  // baseline run
  ExperimentArgs base_args;
  std::string base_kind;
  auto* base = app.add_subcommand("baseline", "reference models");
  base->require_subcommand(1);
  auto* base_run = base->add_subcommand("run", "run one baseline through the experiment harness");
  base_run->add_option("--kind", base_kind, "bpmf, dbptf, mlr or wknn")->required();
  add_experiment_options(base_run, base_args);

  // extract-features / measure
  std::vector<std::string> feat_images, measure_images;
  std::string feat_out, measure_out;
  auto* feat = app.add_subcommand("extract-features", "one CSV row per image: filename, then the feature vector");
  feat->add_option("images", feat_images, "PNG or PPM files")->required()->check(CLI::ExistingFile);
  feat->add_option("--out", feat_out, "CSV path (stdout when omitted)");
  auto* measure = app.add_subcommand("measure", "one CSV row per image: filename, saturation, brightness, contrast");
  measure->add_option("images", measure_images, "PNG or PPM files")->required()->check(CLI::ExistingFile);
  measure->add_option("--out", measure_out, "CSV path (stdout when omitted)");

  // report-curves
  std::string curves_model, curves_out;
  auto* curves = app.add_subcommand("report-curves", "write a model's RMSE trace as CSV");
  curves->add_option("--model", curves_model, "model directory")->required()->check(CLI::ExistingDirectory);
  curves->add_option("--out", curves_out, "CSV path")->required();

  // l21 solve
  std::string l21_z, l21_b, l21_out, l21_trace;
  l21::L21Config l21_cfg;
  auto* l21cmd = app.add_subcommand("l21", "row-sparse solver (debugging)");
  l21cmd->require_subcommand(1);
  auto* l21solve = l21cmd->add_subcommand("solve", "min ||X||_{2,1} s.t. Z X = B");
  l21solve->add_option("--z", l21_z, "Z as CSV")->required()->check(CLI::ExistingFile);
  l21solve->add_option("--b", l21_b, "B as CSV")->required()->check(CLI::ExistingFile);
  l21solve->add_option("--out", l21_out, "X as CSV")->required();
  l21solve->add_option("--trace", l21_trace, "JSON-lines trace (stdout when omitted)");
  l21solve->add_option("--tol", l21_cfg.tol, "relative objective tolerance")->capture_default_str();
  l21solve->add_option("--max-iter", l21_cfg.max_iter, "iteration cap")->capture_default_str();
  l21solve->add_option("--epsilon", l21_cfg.epsilon, "row-norm floor")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  auto emit = [](const std::string& path, const std::string& text) {
    if (path.empty()) std::cout << text;
    else io::write_atomic(output_path(path), text);
  };

  if (*gen) {
    if (norm_scale >= 0.0) sc.norm_scale = norm_scale;
    const auto ds = synthetic::generate(sc);
    const auto out = output_path(syn_out);
    data::write_dataset(out, data::from_synthetic(ds, sc));
    std::cout << "wrote " << sc.n << " images (K=" << sc.k << ", L=" << sc.l << ", M=" << sc.m << ") to " << out.string()
              << "\n";
  } else if (*train) {
    harness::ExperimentConfig cfg = build_config(train_args);
    if (cfg.dataset.empty()) throw InvalidInput("no dataset given");
    const auto ds = data::load_dataset(cfg.dataset);
    std::vector<std::size_t> rows(ds.n());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const Matrix f = ds.inputs(rows, cfg.append_params);
    const auto d = static_cast<std::size_t>(f.rows());
    model::TrainedModel m =
        model::train(ds.delta(rows), f, {ds.n(), ds.m(), ds.k(), d}, cfg.prior.expand(d), cfg.train);
    m.params_in_features = cfg.append_params;
    const auto out = output_path(model_out);
    model::save_model(m, out);
    std::cout << "trained on " << ds.n() << " images, D=" << d << ", " << m.samples.size()
              << " retained samples, final train RMSE " << io::format_double(m.rmse_trace.back().train) << "; saved to "
              << out.string() << "\n";
  } else if (*predict) {
    const auto m = model::load_model(pred_model);
    const Matrix f = io::read_matrix_csv(pred_features).transpose();
    const Matrix a = io::read_matrix_csv(pred_params).transpose();
    if (f.cols() != a.cols()) {
      throw InvalidInput("features list " + std::to_string(f.cols()) + " images but params list " + std::to_string(a.cols()));
    }
    if (static_cast<std::size_t>(a.rows()) != m.dims.k) {
      throw InvalidInput("params have " + std::to_string(a.rows()) + " columns, model K = " + std::to_string(m.dims.k));
    }
    Matrix input = f;
    if (m.params_in_features) {
      input.resize(a.rows() + f.rows(), f.cols());
      input << a, f;
    }
    if (static_cast<std::size_t>(input.rows()) != m.dims.d) {
      throw InvalidInput("model D = " + std::to_string(m.dims.d) + " but inputs have length " + std::to_string(input.rows()));
    }
    const Matrix delta = model::predict_delta_batch(m, input);
    std::string csv = "image,version_id";
    for (std::size_t k = 0; k < m.dims.k; ++k) csv += ",pred_" + std::to_string(k + 1);
    csv += "\n";
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
      for (std::size_t j = 0; j < m.dims.m; ++j) {
        csv += std::to_string(i) + "," + std::to_string(j + 1);
        for (std::size_t k = 0; k < m.dims.k; ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          csv += "," + io::format_double(a(kk, i) + delta(i, static_cast<Eigen::Index>(j * m.dims.k + k)));
        }
        csv += "\n";
      }
    emit(pred_out, csv);
  } else if (*enh) {
    enh_opt.clip = !enh_no_clip;
    if (!enh_lambda.empty()) enh_opt.clip_cfg.lambda = parse_triplet(enh_lambda, "--lambda");
    if (!enh_zeta.empty()) enh_opt.clip_cfg.zeta = parse_triplet(enh_zeta, "--zeta");
    const auto img = image::read_image(enh_image);
    const auto m = model::load_model(enh_model);
    const auto out = output_path(enh_out);
    const auto versions = harness::enhance(img, m, enh_opt, out);
    std::size_t converged = 0;
    for (const auto& v : versions) converged += v.applied.converged();
    std::cout << "wrote " << versions.size() << " versions to " << out.string() << " (" << converged
              << " reached every target within tolerance)\n";
  } else if (*eval || *base_run) {
    harness::ExperimentConfig cfg = build_config(*eval ? eval_args : base_args);
    if (*base_run) {
      cfg.model = harness::parse_model_kind(base_kind);
      if (cfg.model == harness::ModelKind::fbptf) throw InvalidInput("'fbptf' is not a baseline; use evaluate");
    }
    const auto report = harness::run_experiment(cfg);
    print_summary(report, cfg.output);
  } else if (*feat) {
    std::string csv;
    for (const auto& path : feat_images) {
      const Vector v = image::extract_features(image::read_image(path));
      csv += path;
      for (Eigen::Index i = 0; i < v.size(); ++i) csv += "," + io::format_double(v[i]);
      csv += "\n";
    }
    emit(feat_out, csv);
  } else if (*measure) {
    std::string csv = "file,saturation,brightness,contrast\n";
    for (const auto& path : measure_images) {
      const auto p = image::measure_params(image::read_image(path));
      csv += path + "," + io::format_double(p.saturation) + "," + io::format_double(p.brightness) + "," +
             io::format_double(p.contrast) + "\n";
    }
    emit(measure_out, csv);
  } else if (*curves) {
    harness::report_curves(model::load_model(curves_model), output_path(curves_out));
  } else if (*l21solve) {
    l21::L21Problem problem{io::read_matrix_csv(l21_z), io::read_matrix_csv(l21_b), std::nullopt};
    const auto sol = l21::solve(problem, l21_cfg);
    io::write_matrix_csv(output_path(l21_out), sol.x);
    std::string trace;
    for (std::size_t i = 0; i < sol.objective_trace.size(); ++i) {
      trace += "{\"iter\": " + std::to_string(i) + ", \"objective\": " + io::format_double(sol.objective_trace[i]) +
               ", \"residual\": " + io::format_double(sol.residual_trace[i]) + "}\n";
    }
    emit(l21_trace, trace);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalFailure& e) {
    std::cerr << "fbptf: numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fbptf: error: " << e.what() << "\n";
    return 1;
  }
}
