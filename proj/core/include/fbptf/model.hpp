#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fbptf/l21.hpp"
#include "fbptf/numerics.hpp"
#include "fbptf/tensor.hpp"

namespace fbptf::model {

/// N images, M versions per image, K parameters, latent dimension D.
/// With feature coupling D must equal the feature length.
struct ModelDims {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t d = 0;

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// One Gibbs state. Columns index images (u, u_hat), versions (v) and
/// parameters (t). u_hat is the feature reconstruction (F^T P + 1 Q)^T, or a
/// copy of u when coupling is off.
struct LatentState {
  Matrix u;      ///< D x N
  Matrix v;      ///< D x M
  Matrix t;      ///< D x K
  Matrix p;      ///< D x D
  RowVector q;   ///< 1 x D
  Matrix u_hat;  ///< D x N
};

struct HyperState {
  double alpha = 2.0;
  Vector mu_u, mu_v, mu_t;
  Matrix lambda_u, lambda_v, lambda_t;
};

struct HyperPriorConfig {
  GaussianWishartPrior gw;
  double alpha_scale = 1.0;  ///< scale of the 1x1 Wishart prior on alpha
  double alpha_dof = 1.0;
  double sigma2_init = 0.01;
  double alpha_init = 2.0;

  static HyperPriorConfig standard(std::size_t d);
  void validate(std::size_t d) const;
};

struct TrainConfig {
  int sweeps = 30;
  int burn_in = 6;
  l21::L21Config l21;
  std::uint64_t seed = 1;
  bool feature_coupling = true;  ///< false gives D-BPTF
  bool fix_t_ones = false;       ///< T pinned to all-ones: two-factor BPMF
  int track_rmse_every = 1;

  void validate() const;
};

/// Gaussian conditional of one factor column: N(mean, precision^{-1}).
struct ColumnConditional {
  Vector mean;
  Matrix precision;
};

/// Scratch buffers reused across the columns of one block.
struct GibbsWorkspace {
  Matrix y;  ///< D x (observed cells) element-wise products, Y_jk / Y_ik / Y_ij
  Vector r;  ///< matching observed values
  Matrix lambda;
  Vector rhs;

  void reset(std::size_t d, std::size_t cells);
};

struct Snapshot {
  Matrix p;
  RowVector q;
  Matrix v;
  Matrix t;
};

struct RmsePoint {
  int sweep = 0;
  double train = 0.0;
  std::optional<double> validation;
};

/// Held-out cells scored while training. With `features` the rows are new
/// images predicted through F^T P + Q; without, rows index the training
/// tensor and are scored in-sample.
struct Validation {
  DeltaTensor data;
  std::optional<Matrix> features;  ///< D x n_val
};

class TrainedModel {
 public:
  ModelDims dims;
  bool feature_coupling = true;
  /// Feature vectors handed to predict() are [A_t; F_t] rather than F_t.
  bool params_in_features = false;
  std::uint64_t seed = 0;
  int sweeps = 0;
  int burn_in = 0;
  std::vector<Snapshot> samples;
  std::vector<RmsePoint> rmse_trace;
  /// Monte-Carlo mean of <U_hat_i, V_j, T_k> over retained samples, laid out
  /// like the training tensor. Not persisted.
  std::vector<double> in_sample_mean;

  void validate() const;
};

// ---- state and conditionals -------------------------------------------------

/// V, T, P ~ N(0, sigma2); Q = 0; U = U_hat = (F^T P)^T. Without features U is
/// drawn from N(0, sigma2) instead. fix_t_ones pins T to ones.
std::pair<LatentState, HyperState> init_state(const ModelDims& dims, const std::optional<Matrix>& features,
                                              const HyperPriorConfig& cfg, const RngStream& stream,
                                              bool fix_t_ones = false);

/// Recomputes u_hat = (F^T P + 1 Q)^T.
void reconstruct_u(LatentState& state, const Matrix& features);

struct AlphaPosterior {
  double scale = 0.0;  ///< W*, so that E[alpha] = dof * scale
  double dof = 0.0;
};
AlphaPosterior alpha_posterior(const LatentState& state, const DeltaTensor& data, const HyperPriorConfig& cfg);
double sample_alpha(const LatentState& state, const DeltaTensor& data, const HyperPriorConfig& cfg,
                    const RngStream& stream);

/// Draws (mu, Lambda) for U_hat, V and T from their Gaussian-Wishart
/// posteriors; alpha is copied from `current`.
HyperState sample_thetas(const LatentState& state, const HyperState& current, const HyperPriorConfig& cfg,
                         const RngStream& stream);
void sample_theta(const Matrix& columns, const GaussianWishartPrior& prior, const RngStream& stream, Vector& mu,
                  Matrix& lambda);

ColumnConditional u_conditional(std::size_t i, const LatentState& state, const HyperState& hyper,
                                const DeltaTensor& data, GibbsWorkspace& ws);
ColumnConditional v_conditional(std::size_t j, const LatentState& state, const HyperState& hyper,
                                const DeltaTensor& data, GibbsWorkspace& ws);
ColumnConditional t_conditional(std::size_t k, const LatentState& state, const HyperState& hyper,
                                const DeltaTensor& data, GibbsWorkspace& ws);

Vector sample_u_column(std::size_t i, const LatentState& state, const HyperState& hyper, const DeltaTensor& data,
                       GibbsWorkspace& ws, const RngStream& stream);
Vector sample_v_column(std::size_t j, const LatentState& state, const HyperState& hyper, const DeltaTensor& data,
                       GibbsWorkspace& ws, const RngStream& stream);
Vector sample_t_column(std::size_t k, const LatentState& state, const HyperState& hyper, const DeltaTensor& data,
                       GibbsWorkspace& ws, const RngStream& stream);

/// One sweep in fixed order: alpha, thetas, all U columns, (P, Q) refit and
/// reconstruction, all V columns from U_hat, all T columns from U_hat and the
/// new V. Numerical failures are rethrown with the sweep index.
void gibbs_sweep(LatentState& state, HyperState& hyper, const DeltaTensor& data,
                 const std::optional<Matrix>& features, const HyperPriorConfig& hyper_cfg,
                 const TrainConfig& train_cfg, int sweep_index, const RngStream& root);

TrainedModel train(const DeltaTensor& data, const std::optional<Matrix>& features, const ModelDims& dims,
                   const HyperPriorConfig& hyper_cfg, const TrainConfig& train_cfg,
                   const std::optional<Validation>& validation = std::nullopt);

// ---- prediction ----------------------------------------------------------------

/// Monte-Carlo mean of <F_t^T P + Q, V_j, T_k>; returns M x K.
Matrix predict_delta(const TrainedModel& model, const Vector& features);

/// Batch form: one row per image (columns of `features`), M*K predictions
/// per row laid out j-major.
Matrix predict_delta_batch(const TrainedModel& model, const Matrix& features);

/// Same, using only the first `count` retained samples.
Matrix predict_delta_batch(const TrainedModel& model, const Matrix& features, std::size_t count);

/// Raw predicted parameters A_t + delta, M x K, before any clipping.
Matrix predict(const TrainedModel& model, const Vector& features, const Vector& params);

struct ClipConfig {
  Vector lambda;  ///< upward multipliers per parameter
  Vector zeta;    ///< downward multipliers per parameter

  /// lambda = {0.4, 0.4, 0.05}, zeta = {0.3, 0.3, 0.01} for (saturation, brightness, contrast).
  static ClipConfig enhancement_defaults();
  void validate(std::size_t k) const;
};

/// v <- min(v, A_k (1 + lambda_k)), then v <- max(v, A_k (1 - zeta_k)).
Matrix clip(const Matrix& pred, const Vector& params, const ClipConfig& cfg);

}  // namespace fbptf::model
