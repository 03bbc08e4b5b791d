#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fbptf/numerics.hpp"
#include "fbptf/synthetic.hpp"
#include "fbptf/tensor.hpp"

namespace fbptf::data {

/// Low-quality parameters A, version parameters A' and features F for N
/// images.
///
/// Directory layout (all CSV files header-less):
///   features.csv  N rows x L columns
///   params.csv    N rows x K columns
///   versions.csv  N*M rows: image_id (0-based row), version_id (1..M), K values
///   manifest.txt  key = value; N, K, L, M are checked against the files,
///                 everything else is an echo of how the data was made
///   ids.txt       optional, one identifier per line; defaults to the row index
struct ParameterDataset {
  Matrix a;                     ///< K x N
  std::vector<Matrix> a_prime;  ///< M entries, each K x N
  Matrix f;                     ///< L x N
  std::vector<std::string> ids;
  std::map<std::string, std::string> manifest;

  std::size_t n() const noexcept { return static_cast<std::size_t>(a.cols()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(a.rows()); }
  std::size_t l() const noexcept { return static_cast<std::size_t>(f.rows()); }
  std::size_t m() const noexcept { return a_prime.size(); }

  void validate() const;

  /// Delta[i, j, k] = A'_j(k, rows[i]) - A(k, rows[i]), fully observed.
  DeltaTensor delta(const std::vector<std::size_t>& rows) const;

  /// Model inputs for `rows`: F, or [A; F] when `with_params`.
  Matrix inputs(const std::vector<std::size_t>& rows, bool with_params) const;

  /// Stacked targets A' for `rows`: (M K) x n, row j * K + k.
  Matrix stacked_targets(const std::vector<std::size_t>& rows) const;

  ParameterDataset subset(const std::vector<std::size_t>& rows) const;
};

/// Raw N x (M+1) x K tensor for the featureless baselines: train rows first,
/// then test rows. Train rows are fully observed; test rows observe slot 0
/// (A) only. `held_out` marks the test rows' version cells with their true
/// values.
struct FoldIn {
  MaskedTensor observed;
  MaskedTensor held_out;
  std::size_t train_rows = 0;
};
FoldIn fold_in(const ParameterDataset& ds, const std::vector<std::size_t>& train,
               const std::vector<std::size_t>& test);

ParameterDataset from_synthetic(const synthetic::SyntheticDataset& s, const synthetic::SyntheticConfig& cfg);

void write_dataset(const std::filesystem::path& dir, const ParameterDataset& ds);
ParameterDataset load_dataset(const std::filesystem::path& dir);

}  // namespace fbptf::data
