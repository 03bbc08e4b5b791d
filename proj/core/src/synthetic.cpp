#include "fbptf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fbptf::synthetic {

double SyntheticConfig::effective_norm_scale() const {
  return norm_scale ? *norm_scale : 1.0 / std::sqrt(static_cast<double>(l));
}

void SyntheticConfig::validate() const {
  if (k != 3) throw InvalidInput("synthetic: the generator's laws need k = 3");
  if (n == 0 || l == 0 || m == 0) throw InvalidInput("synthetic: n, l and m must be positive");
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidInput("synthetic: eta must lie in [0, 1]");
  for (const Range* r : {&ranges.r1, &ranges.r2, &ranges.r3}) {
    if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) {
      throw InvalidInput("synthetic: invalid coefficient range");
    }
  }
  if (ranges.r1.lo <= 0.0) throw InvalidInput("synthetic: r1 must be positive (it is raised to a power)");
  if (ranges.r3.lo <= 0.0) throw InvalidInput("synthetic: r3 must be positive");
  if (norm_scale && !(*norm_scale >= 0.0)) throw InvalidInput("synthetic: norm_scale must be non-negative");
}

double nonlinear_law(const Coefficients& c, double a1, double a2, double a3) {
  return std::pow(c.r1, a1) + 1.0 / (1.0 + std::exp(-c.r2 * a2)) + std::pow(a3, c.r3);
}

namespace {

double uniform(Engine& gen, const Range& r) {
  std::uniform_real_distribution<double> u(r.lo, r.hi);
  return u(gen);
}

Coefficients draw_coefficients(const CoeffRanges& ranges, const RngStream& stream) {
  Engine gen = stream.engine();
  Coefficients c;
  c.r1 = uniform(gen, ranges.r1);
  c.r2 = uniform(gen, ranges.r2);
  c.r3 = uniform(gen, ranges.r3);
  return c;
}

}  // namespace

SyntheticDataset generate(const SyntheticConfig& config) {
  config.validate();
  const RngStream root(config.seed);
  std::vector<Coefficients> fc(config.l);
  for (std::size_t j = 0; j < config.l; ++j) fc[j] = draw_coefficients(config.ranges, root.child("feature_coeffs", j));
  return generate_with_feature_coeffs(config, fc);
}

SyntheticDataset generate_with_feature_coeffs(const SyntheticConfig& config,
                                              const std::vector<Coefficients>& feature_coeffs) {
  config.validate();
  if (feature_coeffs.size() != config.l) throw InvalidInput("synthetic: feature coefficient table has wrong length");
  const RngStream root(config.seed);
  const auto n = static_cast<Eigen::Index>(config.n);
  const auto k = static_cast<Eigen::Index>(config.k);
  const auto l = static_cast<Eigen::Index>(config.l);

  SyntheticDataset ds;
  ds.feature_coeffs = feature_coeffs;
  ds.a.resize(k, n);
  {
    Engine gen = root.child("params").engine();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index r = 0; r < k; ++r) ds.a(r, i) = u01(gen);
  }

  ds.f.resize(l, n);
  for (Eigen::Index j = 0; j < l; ++j) {
    const Coefficients& c = feature_coeffs[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) ds.f(j, i) = nonlinear_law(c, ds.a(0, i), ds.a(1, i), ds.a(2, i));
  }

  ds.version_coeffs.resize(config.k * config.m);
  for (std::size_t kk = 0; kk < config.k; ++kk)
    for (std::size_t mm = 0; mm < config.m; ++mm)
      ds.version_coeffs[kk * config.m + mm] =
          draw_coefficients(config.ranges, root.child("version_coeffs", kk * config.m + mm));

  const double s = config.effective_norm_scale();
  const Vector norms = ds.f.colwise().norm().transpose();
  ds.a_prime.assign(config.m, Matrix(k, n));
  for (std::size_t mm = 0; mm < config.m; ++mm)
    for (Eigen::Index kk = 0; kk < k; ++kk) {
      const Coefficients& c = ds.version_coeffs[static_cast<std::size_t>(kk) * config.m + mm];
      for (Eigen::Index i = 0; i < n; ++i) {
        ds.a_prime[mm](kk, i) = config.eta * nonlinear_law(c, ds.a(0, i), ds.a(1, i), ds.a(2, i)) +
                                (1.0 - config.eta) * s * norms[i];
      }
    }
  return ds;
}

std::vector<Fold> split_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidInput("split_folds: need at least 2 folds");
  if (folds > n) throw InvalidInput("split_folds: " + std::to_string(folds) + " folds exceed " + std::to_string(n) + " samples");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Engine gen = RngStream(seed).child("folds").engine();
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(gen)]);
  }
  std::vector<Fold> out(folds);
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    out[f].test.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                       perm.begin() + static_cast<std::ptrdiff_t>(start + size));
    start += size;
  }
  for (std::size_t f = 0; f < folds; ++f) {
    for (std::size_t g = 0; g < folds; ++g)
      if (g != f) out[f].train.insert(out[f].train.end(), out[g].test.begin(), out[g].test.end());
    std::sort(out[f].train.begin(), out[f].train.end());
    std::sort(out[f].test.begin(), out[f].test.end());
  }
  return out;
}

}  // namespace fbptf::synthetic
