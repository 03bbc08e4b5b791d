#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbptf/baselines.hpp"
#include "fbptf/model.hpp"

namespace fbptf::harness {

/// Dimension-free prior settings; expanded to a HyperPriorConfig once the
/// latent dimension is known (W0 = w0_scale I, nu0 = D + nu0_offset).
struct PriorSettings {
  double mu0 = 0.0;
  double beta0 = 1.0;
  double w0_scale = 1.0;
  double nu0_offset = 0.0;
  double alpha_scale = 1.0;
  double alpha_dof = 1.0;
  double sigma2_init = 0.01;
  double alpha_init = 2.0;

  model::HyperPriorConfig expand(std::size_t d) const;
};

struct SplitSpec {
  /// Cross-validation when folds >= 2; otherwise a train/val/test split of
  /// the given sizes (val may be 0).
  std::size_t folds = 3;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::uint64_t seed = 1;

  bool cross_validation() const noexcept { return folds >= 2; }
};

enum class ModelKind { fbptf, bpmf, dbptf, mlr, wknn };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path output;
  ModelKind model = ModelKind::fbptf;
  PriorSettings prior;
  model::TrainConfig train;
  /// FBPTF, MLR and WKNN see [A; F] instead of F.
  bool append_params = true;
  /// Clipping is off for RMSE runs; enhancement runs turn it on.
  bool clip = false;
  model::ClipConfig clip_cfg = model::ClipConfig::enhancement_defaults();
  baselines::BaselineSpec baseline;
  SplitSpec split;
  /// Save the trained FBPTF model of every fold under output/model_foldN.
  bool save_models = false;

  void validate() const;
  /// Every setting as `key = value` in a fixed order, for report echoes.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Applies one dotted `key = value`. Unknown keys and malformed values raise
/// InvalidInput naming the key.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// File settings first, then overrides (each `key=value`) in order.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides);

}  // namespace fbptf::harness
