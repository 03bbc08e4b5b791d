#include "fbptf/experiment.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "fbptf/baselines.hpp"
#include "fbptf/io.hpp"
#include "fbptf/model_io.hpp"
#include "fbptf/synthetic.hpp"
#include "json.hpp"

namespace fbptf::harness {

namespace {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// nlohmann prints the shortest round-trip form; reports use a fixed 17
// significant digits instead so that files diff cleanly across builds.
void dump(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        dump(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        dump(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? io::format_double(v) : "null";
      return;
    }
    default: out += j.dump(); return;
  }
}

double rmse_of(const Matrix& pred, const Matrix& truth) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(pred.size()), 1);
  return rmse(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
              std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())), mask);
}

/// Adds A_i to every version block of a stacked (M K) x n delta prediction.
Matrix add_params(const Matrix& delta_rows_major, const data::ParameterDataset& ds, const std::vector<std::size_t>& rows) {
  // predict_delta_batch returns one row per image; transpose to columns.
  Matrix out = delta_rows_major.transpose();
  const auto k = static_cast<Eigen::Index>(ds.k());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < ds.m(); ++j)
      out.col(static_cast<Eigen::Index>(r)).segment(static_cast<Eigen::Index>(j) * k, k) +=
          ds.a.col(static_cast<Eigen::Index>(rows[r]));
  return out;
}

void clip_columns(Matrix& pred, const data::ParameterDataset& ds, const std::vector<std::size_t>& rows,
                  const model::ClipConfig& cfg) {
  const auto k = static_cast<Eigen::Index>(ds.k());
  const auto m = static_cast<Eigen::Index>(ds.m());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto c = static_cast<Eigen::Index>(r);
    Matrix block(m, k);
    for (Eigen::Index j = 0; j < m; ++j) block.row(j) = pred.col(c).segment(j * k, k).transpose();
    block = model::clip(block, ds.a.col(static_cast<Eigen::Index>(rows[r])), cfg);
    for (Eigen::Index j = 0; j < m; ++j) pred.col(c).segment(j * k, k) = block.row(j).transpose();
  }
}

void run_fbptf(const ExperimentConfig& cfg, const data::ParameterDataset& ds, FoldResult& fr, std::uint64_t seed) {
  const Matrix f_train = ds.inputs(fr.train_rows, cfg.append_params);
  const std::size_t d = static_cast<std::size_t>(f_train.rows());
  model::TrainConfig tc = cfg.train;
  tc.seed = seed;
  tc.feature_coupling = true;
  const auto& curve_rows = fr.val_rows.empty() ? fr.test_rows : fr.val_rows;
  std::optional<model::Validation> val;
  if (!curve_rows.empty()) val = model::Validation{ds.delta(curve_rows), ds.inputs(curve_rows, cfg.append_params)};
  model::TrainedModel m = model::train(ds.delta(fr.train_rows), f_train, {fr.train_rows.size(), ds.m(), ds.k(), d},
                                       cfg.prior.expand(d), tc, val);
  m.params_in_features = cfg.append_params;
  const Matrix f_test = ds.inputs(fr.test_rows, cfg.append_params);
  fr.predictions = add_params(model::predict_delta_batch(m, f_test), ds, fr.test_rows);
  fr.trace = m.rmse_trace;

  if (!fr.val_rows.empty()) {
    const model::RmsePoint* best = nullptr;
    for (const auto& p : m.rmse_trace)
      if (p.validation && (!best || *p.validation < *best->validation)) best = &p;
    if (best) {
      fr.selected_sweep = best->sweep;
      const std::size_t count = static_cast<std::size_t>(std::max(1, best->sweep - m.burn_in));
      Matrix sel = add_params(model::predict_delta_batch(m, f_test, std::min(count, m.samples.size())), ds, fr.test_rows);
      if (cfg.clip) clip_columns(sel, ds, fr.test_rows, cfg.clip_cfg);
      fr.selected_test_rmse = rmse_of(sel, ds.stacked_targets(fr.test_rows));
    }
  }
  if (cfg.save_models) {
    const auto name = cfg.split.cross_validation() ? "model_fold" + std::to_string(fr.fold) : std::string("model");
    model::save_model(m, cfg.output / name);
  }
}

void run_factor_baseline(const ExperimentConfig& cfg, const data::ParameterDataset& ds, FoldResult& fr,
                         std::uint64_t seed) {
  // Fold-in order: train rows, then validation rows, then test rows.
  std::vector<std::size_t> held = fr.val_rows;
  held.insert(held.end(), fr.test_rows.begin(), fr.test_rows.end());
  data::FoldIn fi = data::fold_in(ds, fr.train_rows, held);
  MaskedTensor curve = fi.held_out;
  if (!fr.val_rows.empty()) {
    // Score the curve on validation rows only; test rows stay unseen.
    for (std::size_t r = fi.train_rows + fr.val_rows.size(); r < curve.n(); ++r)
      for (std::size_t j = 0; j < curve.m(); ++j)
        for (std::size_t k = 0; k < curve.k(); ++k) curve.hide(r, j, k);
  }
  baselines::BaselineSpec spec = cfg.baseline;
  spec.kind = cfg.model == ModelKind::bpmf ? baselines::Kind::bpmf : baselines::Kind::dbptf;
  spec.seed = seed;
  auto res = spec.kind == baselines::Kind::bpmf ? baselines::bpmf_train_predict(fi.observed, spec, curve)
                                                : baselines::dbptf_train_predict(fi.observed, spec, curve);
  fr.trace = std::move(res.rmse_trace);
  const std::size_t first_test = fi.train_rows + fr.val_rows.size();
  const auto mk = static_cast<Eigen::Index>(ds.m() * ds.k());
  fr.predictions.resize(mk, static_cast<Eigen::Index>(fr.test_rows.size()));
  for (std::size_t r = 0; r < fr.test_rows.size(); ++r)
    for (std::size_t j = 0; j < ds.m(); ++j)
      for (std::size_t k = 0; k < ds.k(); ++k)
        fr.predictions(static_cast<Eigen::Index>(j * ds.k() + k), static_cast<Eigen::Index>(r)) =
            res.prediction[fi.observed.offset(first_test + r, j + 1, k)];
}

void run_regression(const ExperimentConfig& cfg, const data::ParameterDataset& ds, FoldResult& fr) {
  const Matrix x = ds.inputs(fr.train_rows, cfg.append_params);
  const Matrix y = ds.stacked_targets(fr.train_rows);
  const Matrix xt = ds.inputs(fr.test_rows, cfg.append_params);
  if (cfg.model == ModelKind::mlr) {
    fr.predictions = baselines::mlr_fit(x, y).predict(xt);
    return;
  }
  fr.predictions.resize(y.rows(), xt.cols());
  for (Eigen::Index c = 0; c < xt.cols(); ++c) fr.predictions.col(c) = baselines::wknn_predict(xt.col(c), x, y, cfg.baseline);
}

Json trace_json(const std::vector<model::RmsePoint>& trace) {
  Json arr = Json::array();
  for (const auto& p : trace) {
    Json row = {{"sweep", p.sweep}, {"train_rmse", p.train}};
    row["val_rmse"] = p.validation ? Json(*p.validation) : Json(nullptr);
    arr.push_back(row);
  }
  return arr;
}

}  // namespace

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) { return RngStream(seed).child("fold", fold).key(); }

std::vector<FoldResult> make_splits(std::size_t n, const SplitSpec& split) {
  std::vector<FoldResult> out;
  if (split.cross_validation()) {
    const auto folds = synthetic::split_folds(n, split.folds, split.seed);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      FoldResult fr;
      fr.fold = f;
      fr.train_rows = folds[f].train;
      fr.test_rows = folds[f].test;
      out.push_back(std::move(fr));
    }
  } else {
    if (split.train + split.val + split.test > n) {
      throw InvalidInput("split sizes " + std::to_string(split.train) + "/" + std::to_string(split.val) + "/" +
                         std::to_string(split.test) + " exceed " + std::to_string(n) + " images");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Engine gen = RngStream(split.seed).child("split").engine();
    for (std::size_t i = n; i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(perm[i - 1], perm[pick(gen)]);
    }
    FoldResult fr;
    auto take = [&](std::size_t from, std::size_t count) {
      std::vector<std::size_t> v(perm.begin() + static_cast<std::ptrdiff_t>(from),
                                 perm.begin() + static_cast<std::ptrdiff_t>(from + count));
      std::sort(v.begin(), v.end());
      return v;
    };
    fr.train_rows = take(0, split.train);
    fr.val_rows = take(split.train, split.val);
    fr.test_rows = take(split.train + split.val, split.test);
    out.push_back(std::move(fr));
  }
  for (const auto& fr : out) {
    std::vector<std::uint8_t> role(n, 0);
    for (const auto* rows : {&fr.train_rows, &fr.val_rows, &fr.test_rows})
      for (std::size_t i : *rows) {
        if (i >= n || role[i]) throw StateError("split hygiene violated: row " + std::to_string(i) + " used twice");
        role[i] = 1;
      }
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, data::load_dataset(cfg.dataset));
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const data::ParameterDataset& ds) {
  cfg.train.validate();
  cfg.baseline.validate();
  if (cfg.clip) cfg.clip_cfg.validate(ds.k());
  const auto t0 = Clock::now();
  ExperimentReport report;
  report.model = cfg.model;
  report.folds = make_splits(ds.n(), cfg.split);
  std::filesystem::create_directories(cfg.output);

  double sq = 0.0;
  std::size_t cells = 0;
  for (auto& fr : report.folds) {
    const auto tf = Clock::now();
    const std::uint64_t seed =
        fold_seed(cfg.model == ModelKind::fbptf ? cfg.train.seed : cfg.baseline.seed, fr.fold);
    try {
      switch (cfg.model) {
        case ModelKind::fbptf: run_fbptf(cfg, ds, fr, seed); break;
        case ModelKind::bpmf:
        case ModelKind::dbptf: run_factor_baseline(cfg, ds, fr, seed); break;
        case ModelKind::mlr:
        case ModelKind::wknn: run_regression(cfg, ds, fr); break;
      }
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(to_string(cfg.model) + ", fold " + std::to_string(fr.fold) + ": " + e.what());
    } catch (const InvalidInput& e) {
      throw InvalidInput(to_string(cfg.model) + ", fold " + std::to_string(fr.fold) + ": " + e.what());
    }
    if (cfg.clip) clip_columns(fr.predictions, ds, fr.test_rows, cfg.clip_cfg);
    fr.truth = ds.stacked_targets(fr.test_rows);
    fr.test_rmse = rmse_of(fr.predictions, fr.truth);
    sq += (fr.predictions - fr.truth).squaredNorm();
    cells += static_cast<std::size_t>(fr.truth.size());
    fr.seconds = seconds_since(tf);
  }
  double sum = 0.0;
  for (const auto& fr : report.folds) sum += fr.test_rmse;
  report.mean_test_rmse = sum / static_cast<double>(report.folds.size());
  report.pooled_test_rmse = std::sqrt(sq / static_cast<double>(cells));

  // predictions.csv: one row per (test image, version).
  std::string pred = "image_id,fold,version_id";
  for (std::size_t k = 0; k < ds.k(); ++k) pred += ",pred_" + std::to_string(k + 1);
  for (std::size_t k = 0; k < ds.k(); ++k) pred += ",true_" + std::to_string(k + 1);
  pred += "\n";
  for (const auto& fr : report.folds)
    for (std::size_t r = 0; r < fr.test_rows.size(); ++r)
      for (std::size_t j = 0; j < ds.m(); ++j) {
        pred += ds.ids[fr.test_rows[r]] + "," + std::to_string(fr.fold) + "," + std::to_string(j + 1);
        const auto c = static_cast<Eigen::Index>(r);
        for (std::size_t k = 0; k < ds.k(); ++k)
          pred += "," + io::format_double(fr.predictions(static_cast<Eigen::Index>(j * ds.k() + k), c));
        for (std::size_t k = 0; k < ds.k(); ++k)
          pred += "," + io::format_double(fr.truth(static_cast<Eigen::Index>(j * ds.k() + k), c));
        pred += "\n";
      }
  io::write_atomic(cfg.output / "predictions.csv", pred);

  for (const auto& fr : report.folds) {
    const std::string csv = model::curves_csv(fr.trace);
    io::write_atomic(cfg.output / ("curves_fold" + std::to_string(fr.fold) + ".csv"), csv);
    if (fr.fold == 0) io::write_atomic(cfg.output / "curves.csv", csv);
  }

  report.seconds = seconds_since(t0);
  Json j;
  j["model"] = to_string(cfg.model);
  Json config = Json::object();
  for (const auto& [k, v] : cfg.entries())
    if (k != "output") config[k] = v;  // the report already lives there
  j["config"] = config;
  j["dataset"] = {{"N", ds.n()}, {"K", ds.k()}, {"L", ds.l()}, {"M", ds.m()}};
  j["mode"] = cfg.split.cross_validation() ? "cross_validation" : "train_val_test";
  Json folds = Json::array();
  for (const auto& fr : report.folds) {
    Json f = {{"fold", fr.fold},
              {"train_size", fr.train_rows.size()},
              {"val_size", fr.val_rows.size()},
              {"test_size", fr.test_rows.size()},
              {"test_rmse", fr.test_rmse},
              {"wall_time_seconds", fr.seconds}};
    f["curve"] = trace_json(fr.trace);
    if (!fr.trace.empty()) {
      f["final_train_rmse"] = fr.trace.back().train;
      f["final_val_rmse"] = fr.trace.back().validation ? Json(*fr.trace.back().validation) : Json(nullptr);
    }
    if (fr.selected_sweep) {
      f["selected_sweep"] = *fr.selected_sweep;
      f["selected_test_rmse"] = *fr.selected_test_rmse;
    }
    folds.push_back(f);
  }
  j["folds"] = folds;
  j["mean_test_rmse"] = report.mean_test_rmse;
  j["pooled_test_rmse"] = report.pooled_test_rmse;
  j["wall_time_seconds"] = report.seconds;
  report.json.clear();
  dump(j, report.json, 0);
  report.json += "\n";
  io::write_atomic(cfg.output / "report.json", report.json);
  return report;
}

void report_curves(const model::TrainedModel& model, const std::filesystem::path& out) {
  io::write_atomic(out, model::curves_csv(model.rmse_trace));
}

std::vector<EnhanceVersion> enhance(const image::ImageRGB& img, const model::TrainedModel& model,
                                    const EnhanceOptions& opt, const std::optional<std::filesystem::path>& out_dir) {
  model.validate();
  if (model.dims.k != 3) {
    throw InvalidInput("enhancement needs a model over 3 parameters, this one has K = " + std::to_string(model.dims.k));
  }
  const Vector feats = image::extract_features(img, opt.features);
  const Vector params = image::measure_params(img).as_vector();
  Vector input(feats.size() + (model.params_in_features ? 3 : 0));
  if (model.params_in_features) input << params, feats;
  else input = feats;
  if (static_cast<std::size_t>(input.size()) != model.dims.d) {
    throw InvalidInput("model latent dimension D = " + std::to_string(model.dims.d) +
                       " does not match the image input length " + std::to_string(input.size()));
  }
  if (opt.clip) opt.clip_cfg.validate(3);
  const Matrix raw = model::predict(model, input, params);
  const Matrix clipped = opt.clip ? model::clip(raw, params, opt.clip_cfg) : raw;

  std::vector<EnhanceVersion> out;
  std::string table =
      "version,pred_saturation,pred_brightness,pred_contrast,clipped_saturation,clipped_brightness,clipped_contrast,"
      "achieved_saturation,achieved_brightness,achieved_contrast,converged\n";
  for (Eigen::Index j = 0; j < raw.rows(); ++j) {
    EnhanceVersion v;
    v.predicted = raw.row(j).transpose();
    v.clipped = clipped.row(j).transpose();
    image::ImageParams target = image::ImageParams::from_vector(v.clipped.cwiseMax(0.0).cwiseMin(1.0));
    v.applied = image::apply_params(img, target, opt.tol, opt.max_iter);
    if (out_dir) {
      image::write_png(*out_dir / ("version_" + std::to_string(j + 1) + ".png"), v.applied.image);
      table += std::to_string(j + 1);
      for (double x : {v.predicted[0], v.predicted[1], v.predicted[2], v.clipped[0], v.clipped[1], v.clipped[2],
                       v.applied.achieved.saturation, v.applied.achieved.brightness, v.applied.achieved.contrast})
        table += "," + io::format_double(x);
      table += v.applied.converged() ? ",true\n" : ",false\n";
    }
    out.push_back(std::move(v));
  }
  if (out_dir) io::write_atomic(*out_dir / "parameters.csv", table);
  return out;
}

}  // namespace fbptf::harness
