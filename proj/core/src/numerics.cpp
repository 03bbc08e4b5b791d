#include "fbptf/numerics.hpp"

#include <cmath>
#include <random>

namespace fbptf {

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw InvalidInput(what + " contains NaN or infinite entries");
}

double cp_inner(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                const Eigen::Ref<const Vector>& t) {
  if (u.size() == 0 || u.size() != v.size() || u.size() != t.size()) {
    throw InvalidInput("cp_inner: factor lengths differ (" + std::to_string(u.size()) + ", " +
                       std::to_string(v.size()) + ", " + std::to_string(t.size()) + ")");
  }
  double s = 0.0;
  for (Eigen::Index d = 0; d < u.size(); ++d) s += u[d] * v[d] * t[d];
  return s;
}

double l21_norm(const Matrix& x) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) s += x.row(r).norm();
  return s;
}

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("cholesky: matrix is not square");
  const Eigen::Index n = a.rows();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (((a - a.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale) {
    throw InvalidInput("cholesky: matrix is not symmetric");
  }
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw DecompositionFailure(static_cast<std::size_t>(j), "matrix is not positive definite");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

Matrix cholesky_jittered(const Matrix& a) {
  try {
    return cholesky(a);
  } catch (const DecompositionFailure&) {
    // one bounded retry, jitter relative to the mean diagonal magnitude
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().mean());
    Matrix b = a;
    b.diagonal().array() += 1e-10 * scale;
    return cholesky(b);
  }
}

Matrix spd_inverse(const Matrix& a) {
  const Matrix l = cholesky_jittered(a);
  const auto tri = l.triangularView<Eigen::Lower>();
  Matrix linv = tri.solve(Matrix::Identity(a.rows(), a.cols()));
  Matrix inv = linv.transpose() * linv;
  return 0.5 * (inv + inv.transpose());
}

Vector sample_standard_normal(std::size_t n, Engine& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(gen);
  return z;
}

Vector sample_mvn_factored(const Vector& mean, const Matrix& precision_factor, Engine& gen) {
  // precision = L L^T  =>  x = mean + L^{-T} z has covariance precision^{-1}
  Vector z = sample_standard_normal(static_cast<std::size_t>(mean.size()), gen);
  precision_factor.triangularView<Eigen::Lower>().transpose().solveInPlace(z);
  return mean + z;
}

Vector sample_mvn(const Vector& mean, const Matrix& precision, Engine& gen) {
  if (precision.rows() != mean.size() || precision.cols() != mean.size()) {
    throw InvalidInput("sample_mvn: precision shape does not match mean length");
  }
  return sample_mvn_factored(mean, cholesky_jittered(precision), gen);
}

Vector sample_mvn(const Vector& mean, const Matrix& precision, const RngStream& stream) {
  Engine gen = stream.engine();
  return sample_mvn(mean, precision, gen);
}

Matrix sample_wishart(const Matrix& scale, double dof, Engine& gen) {
  const Eigen::Index d = scale.rows();
  if (scale.cols() != d || d == 0) throw InvalidInput("sample_wishart: scale must be square and non-empty");
  if (!(dof >= static_cast<double>(d))) {
    throw InvalidInput("sample_wishart: dof " + std::to_string(dof) + " below dimension " + std::to_string(d));
  }
  const Matrix l = cholesky_jittered(scale);
  // Bartlett: A lower triangular, A_ii^2 ~ chi2(dof - i), A_ij ~ N(0,1) below the diagonal
  Matrix bart = Matrix::Zero(d, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::chi_squared_distribution<double> chi2(dof - static_cast<double>(i));
    bart(i, i) = std::sqrt(chi2(gen));
    for (Eigen::Index j = 0; j < i; ++j) bart(i, j) = normal(gen);
  }
  const Matrix la = l * bart;
  Matrix w = la * la.transpose();
  return 0.5 * (w + w.transpose());
}

Matrix sample_wishart(const Matrix& scale, double dof, const RngStream& stream) {
  Engine gen = stream.engine();
  return sample_wishart(scale, dof, gen);
}

GaussianWishartPrior GaussianWishartPrior::standard(Eigen::Index dim) {
  GaussianWishartPrior p;
  p.mu0 = Vector::Zero(dim);
  p.beta0 = 1.0;
  p.w0 = Matrix::Identity(dim, dim);
  p.nu0 = static_cast<double>(dim);
  return p;
}

void GaussianWishartPrior::validate() const {
  const auto d = mu0.size();
  if (d == 0) throw InvalidInput("Gaussian-Wishart prior: empty mean");
  if (w0.rows() != d || w0.cols() != d) throw InvalidInput("Gaussian-Wishart prior: W0 shape mismatch");
  if (!(beta0 > 0.0)) throw InvalidInput("Gaussian-Wishart prior: beta0 must be positive");
  if (!(nu0 >= static_cast<double>(d))) throw InvalidInput("Gaussian-Wishart prior: nu0 must be >= D");
  cholesky(w0);
}

GaussianWishartPosterior gw_posterior(const GaussianWishartPrior& prior, const Matrix& columns) {
  const Eigen::Index d = prior.mu0.size();
  if (columns.rows() != d && columns.cols() != 0) {
    throw InvalidInput("gw_posterior: columns have " + std::to_string(columns.rows()) + " rows, prior has D=" +
                       std::to_string(d));
  }
  const Eigen::Index n = columns.cols();
  GaussianWishartPosterior post;
  if (n == 0) {
    post.mu_star = prior.mu0;
    post.beta_star = prior.beta0;
    post.w_star = prior.w0;
    post.nu_star = prior.nu0;
    return post;
  }
  const double nd = static_cast<double>(n);
  const Vector mean = columns.rowwise().mean();
  const Matrix centered = columns.colwise() - mean;
  // n * S_bar with S_bar the 1/n scatter
  const Matrix scatter = centered * centered.transpose();
  const Vector diff = prior.mu0 - mean;

  post.beta_star = prior.beta0 + nd;
  post.nu_star = prior.nu0 + nd;
  post.mu_star = (prior.beta0 * prior.mu0 + nd * mean) / post.beta_star;
  Matrix w_inv = spd_inverse(prior.w0) + scatter + (prior.beta0 * nd / post.beta_star) * diff * diff.transpose();
  w_inv = 0.5 * (w_inv + w_inv.transpose());
  post.w_star = spd_inverse(w_inv);
  return post;
}

double rmse(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> mask) {
  if (pred.size() != truth.size() || pred.size() != mask.size()) throw InvalidInput("rmse: shape mismatch");
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double r = pred[i] - truth[i];
    ss += r * r;
    ++count;
  }
  if (count == 0) throw InvalidInput("rmse: mask has no observed cells");
  return std::sqrt(ss / static_cast<double>(count));
}

}  // namespace fbptf
