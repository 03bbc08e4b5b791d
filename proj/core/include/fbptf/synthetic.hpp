#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fbptf/numerics.hpp"

namespace fbptf::synthetic {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// Sampling intervals of the per-law coefficients (r1, r2, r3).
struct CoeffRanges {
  Range r1{0.5, 2.0};
  Range r2{-3.0, 3.0};
  Range r3{0.5, 3.0};
};

struct SyntheticConfig {
  std::size_t n = 1000;
  std::size_t k = 3;
  std::size_t l = 50;
  std::size_t m = 4;
  double eta = 0.5;
  CoeffRanges ranges;
  /// Multiplier on ||F_i||_2 in the version law; 1/sqrt(l) when unset.
  std::optional<double> norm_scale;
  std::uint64_t seed = 42;

  double effective_norm_scale() const;
  void validate() const;
};

struct Coefficients {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
};

/// r1^{a1} + 1 / (1 + exp(-r2 a2)) + a3^{r3}
double nonlinear_law(const Coefficients& c, double a1, double a2, double a3);

struct SyntheticDataset {
  Matrix a;                  ///< K x N, entries in [0, 1]
  Matrix f;                  ///< L x N
  std::vector<Matrix> a_prime;  ///< M entries, each K x N
  std::vector<Coefficients> feature_coeffs;  ///< one per feature row
  std::vector<Coefficients> version_coeffs;  ///< index k * M + m
};

/// Features and version parameters are independent draws: feature rows and
/// (k, m) targets use separate substreams, so changing one table never
/// moves the other.
SyntheticDataset generate(const SyntheticConfig& config);

/// Same as generate() but with the feature coefficient table supplied, e.g.
/// to perturb it while keeping everything else fixed.
SyntheticDataset generate_with_feature_coeffs(const SyntheticConfig& config,
                                              const std::vector<Coefficients>& feature_coeffs);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded permutation cut into `folds` near-equal test sets; the first
/// n % folds test sets carry one extra index.
std::vector<Fold> split_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

}  // namespace fbptf::synthetic
