#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fbptf/config.hpp"
#include "fbptf/dataset.hpp"
#include "fbptf/image.hpp"
#include "fbptf/model.hpp"

namespace fbptf::harness {

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  std::vector<std::size_t> test_rows;
  /// Predicted and true A' for the test rows, (M K) x n_test, row j * K + k.
  Matrix predictions;
  Matrix truth;
  double test_rmse = 0.0;
  std::vector<model::RmsePoint> trace;
  /// Train/val/test runs with a validation set: the sweep whose running
  /// prediction scored best on validation, and the test RMSE of the chain
  /// truncated there.
  std::optional<int> selected_sweep;
  std::optional<double> selected_test_rmse;
  double seconds = 0.0;
};

struct ExperimentReport {
  ModelKind model = ModelKind::fbptf;
  std::vector<FoldResult> folds;
  double mean_test_rmse = 0.0;    ///< average of per-fold RMSEs
  double pooled_test_rmse = 0.0;  ///< over every predicted cell of every fold
  double seconds = 0.0;
  std::string json;               ///< the report.json contents
};

/// Cross-validation folds or a train/val/test split, with the guarantee that
/// no row appears in two roles (checked, StateError otherwise).
std::vector<FoldResult> make_splits(std::size_t n, const SplitSpec& split);

/// Seed used for fold `fold`: a substream of the configured seed.
std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

/// Loads cfg.dataset and runs the experiment; see the overload.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Splits, trains cfg.model per fold, predicts every test version and writes
/// to cfg.output: report.json, predictions.csv, curves.csv (first fold) and
/// curves_foldN.csv (every fold), plus model directories when requested.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const data::ParameterDataset& ds);

/// Rewrites the trace as the CSV served by the `report-curves` subcommand.
void report_curves(const model::TrainedModel& model, const std::filesystem::path& out);

struct EnhanceVersion {
  Vector predicted;  ///< raw A + delta
  Vector clipped;
  image::ApplyResult applied;
};

struct EnhanceOptions {
  bool clip = true;
  model::ClipConfig clip_cfg = model::ClipConfig::enhancement_defaults();
  image::FeatureConfig features;
  double tol = 0.01;
  int max_iter = 40;
};

/// Predicts M parameter sets for `img`, clips, applies each and, when
/// `out_dir` is given, writes version_1.png ... version_M.png and
/// parameters.csv.
std::vector<EnhanceVersion> enhance(const image::ImageRGB& img, const model::TrainedModel& model,
                                    const EnhanceOptions& opt,
                                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace fbptf::harness
