#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fbptf/model.hpp"

namespace fbptf::model {

inline constexpr int kModelFormatVersion = 1;

/// Model directory layout:
///   manifest.txt            key = value (format_version, N, M, K, D, sweeps,
///                           burn_in, seed, snapshot_count, feature_coupling,
///                           params_in_features)
///   P_0001.csv Q_0001.csv   one quadruple per retained sample
///   V_0001.csv T_0001.csv
///   curves.csv              the recorded RMSE trace
/// Every file is written atomically; snapshots are written before the
/// manifest so a half-written directory never loads.
void save_model(const TrainedModel& model, const std::filesystem::path& dir);

/// Validates every snapshot's shape against the manifest dims.
TrainedModel load_model(const std::filesystem::path& dir);

/// Header `sweep,train_rmse,val_rmse`; missing validation values are empty.
std::string curves_csv(const std::vector<RmsePoint>& trace);
std::vector<RmsePoint> parse_curves_csv(const std::string& text, const std::string& file);

}  // namespace fbptf::model
