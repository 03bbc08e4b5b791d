#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "fbptf/error.hpp"
#include "fbptf/rng.hpp"

namespace fbptf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Throws InvalidInput naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);

/// Trilinear CP cell model: sum_d u_d * v_d * t_d.
double cp_inner(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                const Eigen::Ref<const Vector>& t);

/// Sum of the Euclidean norms of the rows of `x`.
double l21_norm(const Matrix& x);

/// Lower Cholesky factor of a symmetric positive-definite matrix.
/// Throws DecompositionFailure carrying the first non-positive pivot.
Matrix cholesky(const Matrix& a);

/// Cholesky that retries once with 1e-10 * I added on failure.
Matrix cholesky_jittered(const Matrix& a);

/// Inverse of an SPD matrix through its (jittered) Cholesky factor.
Matrix spd_inverse(const Matrix& a);

Vector sample_standard_normal(std::size_t n, Engine& gen);

/// Draw from N(mean, precision^{-1}).
Vector sample_mvn(const Vector& mean, const Matrix& precision, Engine& gen);
Vector sample_mvn(const Vector& mean, const Matrix& precision, const RngStream& stream);

/// Draw from N(mean, (L L^T)^{-1}) given the lower factor L of the precision.
Vector sample_mvn_factored(const Vector& mean, const Matrix& precision_factor, Engine& gen);

/// Wishart(scale, dof) via the Bartlett decomposition; mean is dof * scale.
Matrix sample_wishart(const Matrix& scale, double dof, Engine& gen);
Matrix sample_wishart(const Matrix& scale, double dof, const RngStream& stream);

struct GaussianWishartPrior {
  Vector mu0;
  double beta0 = 1.0;
  Matrix w0;
  double nu0 = 1.0;

  /// mu0 = 0, beta0 = 1, W0 = I_D, nu0 = D.
  static GaussianWishartPrior standard(Eigen::Index dim);
  std::size_t dim() const noexcept { return static_cast<std::size_t>(mu0.size()); }
  void validate() const;
};

struct GaussianWishartPosterior {
  Vector mu_star;
  double beta_star = 0.0;
  Matrix w_star;
  double nu_star = 0.0;
};

/// Conjugate update of a Gaussian-Wishart prior from the columns of a D x n
/// matrix. The scatter uses the biased 1/n normalization; n = 0 returns the
/// prior unchanged.
GaussianWishartPosterior gw_posterior(const GaussianWishartPrior& prior, const Matrix& columns);

/// Pooled root-mean-square error over the cells where mask != 0.
double rmse(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> mask);

}  // namespace fbptf
