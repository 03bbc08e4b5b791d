#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbptf/model.hpp"
#include "fbptf/numerics.hpp"
#include "fbptf/tensor.hpp"

namespace fbptf::baselines {

enum class Kind { bpmf, dbptf, mlr, wknn };

std::string to_string(Kind kind);
Kind parse_kind(const std::string& name);

struct BaselineSpec {
  Kind kind = Kind::wknn;
  std::size_t latent_dim = 10;
  int sweeps = 30;
  int burn_in = 6;
  std::size_t k = 5;
  double distance_epsilon = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Raw parameters over N x (M+1) x K: slot 0 holds the low-quality
/// parameters, slots 1..M the enhanced versions. Test rows observe slot 0 only.
using FoldInTensor = MaskedTensor;

struct FoldInResult {
  /// Monte-Carlo mean for every cell, in the tensor's flat layout.
  std::vector<double> prediction;
  std::vector<model::RmsePoint> rmse_trace;
};

/// Two-factor Gaussian-Wishart Gibbs on the N x ((M+1) K) unfolding, i.e.
/// the factor model with T pinned to ones and K collapsed into the columns.
/// `validation` (same shape) marks the held-out cells scored per sweep.
FoldInResult bpmf_train_predict(const FoldInTensor& data, const BaselineSpec& spec,
                                const std::optional<MaskedTensor>& validation = std::nullopt);

/// The three-factor model with feature coupling off, on the fold-in tensor.
FoldInResult dbptf_train_predict(const FoldInTensor& data, const BaselineSpec& spec,
                                 const std::optional<MaskedTensor>& validation = std::nullopt);

struct LinearModel {
  Matrix coef;       ///< p x q
  Vector intercept;  ///< q

  /// Columns of `x` are samples; returns q x n.
  Matrix predict(const Matrix& x) const;
};

/// Least squares with intercept: min sum ||y_i - C^T x_i - b||^2, solved
/// through a rank-revealing pseudo-inverse (minimum-norm when deficient).
/// x is p x n, y is q x n.
LinearModel mlr_fit(const Matrix& x, const Matrix& y);

/// Inverse-distance weighted mean of the k nearest training targets
/// (Euclidean, ties broken by index); w_i = 1 / (d_i + epsilon).
/// train_inputs is p x n, train_targets q x n.
Vector wknn_predict(const Vector& query, const Matrix& train_inputs, const Matrix& train_targets,
                    const BaselineSpec& spec);

}  // namespace fbptf::baselines
