#pragma once

#include <optional>
#include <vector>

#include "fbptf/numerics.hpp"

namespace fbptf::l21 {

/// Settings of the feature-coupling fit. gamma never appears on its own:
/// only delta = gamma / beta enters the reformulated problem.
struct L21Config {
  double beta = 0.1;
  double delta = 3.0;
  double epsilon = 1e-10;  ///< floor on row norms in the reweighting
  int max_iter = 200;
  double tol = 1e-8;  ///< relative objective change that stops the iteration

  static L21Config from_beta_gamma(double beta, double gamma);
  void validate() const;
};

/// Split of the stacked unknown X = [E; P; delta*Q] into (N, D, 1) rows.
struct BlockSizes {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  Eigen::Index tail = 1;
};

/// min ||X||_{2,1} subject to Z X = B.
struct L21Problem {
  Matrix z;
  Matrix b;
  /// Present when Z = [-beta I_N | F^T | 1/delta]; enables the structured
  /// solve that never forms an N x N system.
  std::optional<BlockSizes> blocks;
};

struct L21Solution {
  Matrix x;
  std::vector<double> objective_trace;  ///< ||X||_{2,1} of the start point, then one entry per iteration
  std::vector<double> residual_trace;   ///< ||Z X - B||_F alongside objective_trace
  double feasibility_residual = 0.0;
  int iterations = 0;
  std::optional<BlockSizes> blocks;
};

/// Builds Z = [-beta I_N | F^T | delta^{-1} 1^N] and B = U^T from a D x N
/// feature matrix and D x N target factor.
L21Problem assemble_problem(const Matrix& features, const Matrix& target, const L21Config& config);

/// Iteratively reweighted solve: X <- W Z^T (Z W Z^T)^{-1} B with
/// W = diag(2 max(||x_i||, epsilon)), started from the minimum-norm
/// feasible point. Uses the structured path when `problem.blocks` is set and
/// the dense path otherwise.
L21Solution solve(const L21Problem& problem, const L21Config& config);

/// Same iteration, always through the dense N x N system.
L21Solution solve_dense(const L21Problem& problem, const L21Config& config);

/// Square nonsingular Z only: the unique feasible point Z^{-1} B.
L21Solution solve_direct(const L21Problem& problem);

/// Minimum Frobenius-norm feasible point Z^+ B (Z must have full row rank).
Matrix min_norm_feasible(const L21Problem& problem);

struct Coupling {
  Matrix p;     ///< D x D
  RowVector q;  ///< 1 x D
  Matrix e;     ///< N x D reconstruction slack
};

/// Splits a structured solution into P, Q = (last row) / delta and E.
Coupling extract_pq(const L21Solution& solution, const L21Config& config);

}  // namespace fbptf::l21
