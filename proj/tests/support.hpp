#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "fbptf/numerics.hpp"

namespace fbptf::test_support {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fbptf") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Engine& gen, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(gen);
  return m;
}

inline Matrix random_spd(Eigen::Index d, Engine& gen) {
  Matrix a = gaussian(d, d, gen);
  return a * a.transpose() + static_cast<double>(d) * Matrix::Identity(d, d);
}

namespace oracle {

/// Moore-Penrose pseudo-inverse through an SVD with the usual cutoff.
inline Matrix pinv(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = 1e-12 * std::max(a.rows(), a.cols()) * (s.size() ? s[0] : 0.0);
  Vector inv = s;
  for (Eigen::Index i = 0; i < s.size(); ++i) inv[i] = s[i] > cutoff ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline double l21(const Matrix& x) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) s += x.row(r).norm();
  return s;
}

/// Projected subgradient descent on min ||X||_{2,1} s.t. Z X = B with
/// diminishing steps. Returns the best objective seen; every iterate is
/// projected back onto the affine set, so this is an upper bound.
inline double l21_projected_subgradient(const Matrix& z, const Matrix& b, int iterations) {
  const Matrix zp = pinv(z);
  auto project = [&](const Matrix& v) -> Matrix { return v - zp * (z * v - b); };
  Matrix x = zp * b;
  double best = l21(x);
  const double step0 = 0.1 * std::max(x.norm(), 1e-12);
  for (int t = 0; t < iterations; ++t) {
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double n = x.row(r).norm();
      if (n > 0.0) g.row(r) = x.row(r) / n;
    }
    const Matrix pg = g - zp * (z * g);
    const double gn = pg.norm();
    if (gn == 0.0) break;
    x = project(x - (step0 / std::sqrt(t + 1.0)) * pg / gn);
    best = std::min(best, l21(x));
  }
  return best;
}

/// ADMM on min ||Y||_{2,1} s.t. X = Y, Z X = B: X is an affine projection,
/// Y a row-wise shrinkage. Returns the objective at the last feasible X.
inline double l21_admm(const Matrix& z, const Matrix& b, int iterations, double rho = 1.0) {
  const Matrix zp = pinv(z);
  auto project = [&](const Matrix& v) -> Matrix { return v - zp * (z * v - b); };
  Matrix x = zp * b;
  Matrix y = x;
  Matrix u = Matrix::Zero(x.rows(), x.cols());
  for (int t = 0; t < iterations; ++t) {
    x = project(y - u);
    const Matrix v = x + u;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      const double n = v.row(r).norm();
      const double keep = n > 1.0 / rho ? 1.0 - 1.0 / (rho * n) : 0.0;
      y.row(r) = keep * v.row(r);
    }
    u += x - y;
  }
  return l21(project(y));
}

struct GwPosterior {
  Vector mu;
  double beta;
  Matrix w;
  double nu;
};

/// Conjugate update written out with explicit sums over columns.
inline GwPosterior gw_direct(const Vector& mu0, double beta0, const Matrix& w0, double nu0, const Matrix& x) {
  const Eigen::Index d = x.rows();
  const double n = static_cast<double>(x.cols());
  Vector xbar = Vector::Zero(d);
  for (Eigen::Index c = 0; c < x.cols(); ++c) xbar += x.col(c);
  xbar /= n;
  Matrix s = Matrix::Zero(d, d);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Vector e = x.col(c) - xbar;
    s += e * e.transpose();
  }
  s /= n;
  GwPosterior p;
  p.beta = beta0 + n;
  p.nu = nu0 + n;
  p.mu = (beta0 * mu0 + n * xbar) / (beta0 + n);
  const Vector diff = mu0 - xbar;
  const Matrix winv = w0.inverse() + n * s + (beta0 * n / (beta0 + n)) * diff * diff.transpose();
  p.w = winv.inverse();
  return p;
}

}  // namespace oracle

}  // namespace fbptf::test_support
