#include "fbptf/l21.hpp"

#include <cmath>
#include <functional>

namespace fbptf::l21 {

L21Config L21Config::from_beta_gamma(double beta, double gamma) {
  L21Config c;
  c.beta = beta;
  c.delta = gamma / beta;
  return c;
}

void L21Config::validate() const {
  if (!(beta > 0.0)) throw InvalidInput("l21: beta must be positive");
  if (!(delta > 0.0)) throw InvalidInput("l21: delta must be positive");
  if (!(epsilon > 0.0)) throw InvalidInput("l21: epsilon must be positive");
  if (!(tol > 0.0)) throw InvalidInput("l21: tol must be positive");
  if (max_iter < 1) throw InvalidInput("l21: max_iter must be at least 1");
}

L21Problem assemble_problem(const Matrix& features, const Matrix& target, const L21Config& config) {
  config.validate();
  if (features.rows() != target.rows() || features.cols() != target.cols()) {
    throw InvalidInput("assemble_problem: features are " + std::to_string(features.rows()) + "x" +
                       std::to_string(features.cols()) + " but target is " + std::to_string(target.rows()) + "x" +
                       std::to_string(target.cols()));
  }
  const Eigen::Index d = features.rows();
  const Eigen::Index n = features.cols();
  if (n < 1 || d < 1) throw InvalidInput("assemble_problem: empty features");

  L21Problem prob;
  prob.z = Matrix::Zero(n, n + d + 1);
  prob.z.leftCols(n).diagonal().setConstant(-config.beta);
  prob.z.middleCols(n, d) = features.transpose();
  prob.z.col(n + d).setConstant(1.0 / config.delta);
  prob.b = target.transpose();
  prob.blocks = BlockSizes{n, d, 1};
  return prob;
}

namespace {

// Returns the weighted minimum-norm feasible point
//   argmin sum_i ||x_i||^2 / w_i  s.t.  Z X = B,
// i.e. X = W Z^T (Z W Z^T)^{-1} B, for the given row weights.
using WeightedSolve = std::function<Matrix(const Vector& w, int iteration)>;

bool has_block_structure(const L21Problem& p) {
  if (!p.blocks) return false;
  const auto& bs = *p.blocks;
  if (bs.tail != 1 || p.z.rows() != bs.n || p.z.cols() != bs.n + bs.d + 1) return false;
  const double beta = -p.z(0, 0);
  if (!(beta > 0.0)) return false;
  const auto lead = p.z.leftCols(bs.n);
  for (Eigen::Index c = 0; c < bs.n; ++c)
    for (Eigen::Index r = 0; r < bs.n; ++r)
      if (lead(r, c) != (r == c ? -beta : 0.0)) return false;
  return true;
}

// General Z: X = S Y with S = W^{1/2} and Y the minimum-norm solution of
// (Z S) Y = B, taken from a QR factorization of (Z S)^T. Working with the
// square root keeps the conditioning at kappa(Z S) instead of its square.
WeightedSolve dense_solver(const L21Problem& p) {
  return [&p](const Vector& w, int iteration) -> Matrix {
    const Vector s = w.cwiseSqrt();
    const Matrix zst = (p.z * s.asDiagonal()).transpose();
    Eigen::HouseholderQR<Matrix> qr(zst);
    const Eigen::Index r = p.z.rows();
    const auto rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < r; ++i) {
      if (!(std::abs(qr.matrixQR()(i, i)) > 0.0)) throw SolverBreakdown(iteration, "weighted Z lost full row rank");
    }
    auto apply = [&](const Matrix& rhs) -> Matrix {
      Matrix y = Matrix::Zero(zst.rows(), rhs.cols());
      y.topRows(r) = rr.transpose().solve(rhs);
      return s.asDiagonal() * (qr.householderQ() * y);
    };
    Matrix x = apply(p.b);
    const Matrix res = p.b - p.z * x;  // one refinement step
    x += apply(res);
    return x;
  };
}

// Z = [-beta I_N | G]. The constraint fixes E = (G X_g - B) / beta, so the
// weighted problem reduces to the regularized least squares
//   min || Omega^{1/2} (G X_g - B) ||^2 + || W_g^{-1/2} X_g ||^2,
// Omega = diag(1 / (beta^2 w_e)), over the (D+1) rows of X_g. Solved by QR
// of the stacked (N + D + 1) x (D + 1) system; E is then recovered exactly,
// so every iterate is feasible to rounding.
WeightedSolve structured_solver(const L21Problem& p) {
  const Eigen::Index n = p.blocks->n;
  const double beta = -p.z(0, 0);
  return [&p, n, beta](const Vector& w, int iteration) -> Matrix {
    const Eigen::Index m = p.z.cols() - n;
    const auto g = p.z.rightCols(m);
    const Vector omega_sqrt = (beta * w.head(n).cwiseSqrt()).cwiseInverse();
    Matrix stacked(n + m, m);
    stacked.topRows(n) = omega_sqrt.asDiagonal() * g;
    stacked.bottomRows(m) = w.tail(m).cwiseSqrt().cwiseInverse().asDiagonal();
    Matrix rhs = Matrix::Zero(n + m, p.b.cols());
    rhs.topRows(n) = omega_sqrt.asDiagonal() * p.b;
    Eigen::HouseholderQR<Matrix> qr(stacked);
    const Matrix xg = qr.solve(rhs);
    if (!xg.allFinite()) throw SolverBreakdown(iteration, "reduced least-squares solve produced non-finite values");
    Matrix x(p.z.cols(), p.b.cols());
    x.bottomRows(m) = xg;
    x.topRows(n) = (g * xg - p.b) / beta;
    return x;
  };
}

Matrix residual(const L21Problem& p, const Matrix& x) {
  if (has_block_structure(p)) {
    const Eigen::Index n = p.blocks->n;
    const double beta = -p.z(0, 0);
    return p.b - (-beta * x.topRows(n) + p.z.rightCols(p.z.cols() - n) * x.bottomRows(p.z.cols() - n));
  }
  return p.b - p.z * x;
}

Vector row_weights(const Matrix& x, double epsilon) {
  Vector w(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) w[r] = 2.0 * std::max(x.row(r).norm(), epsilon);
  return w;
}

void check_shapes(const L21Problem& p) {
  if (p.z.rows() != p.b.rows()) throw InvalidInput("l21: Z and B row counts differ");
  if (p.z.rows() == 0 || p.z.cols() == 0 || p.b.cols() == 0) throw InvalidInput("l21: empty problem");
  require_finite(p.z, "Z");
  require_finite(p.b, "B");
}

L21Solution run(const L21Problem& p, const L21Config& config, const WeightedSolve& weighted) {
  config.validate();
  check_shapes(p);

  L21Solution sol;
  sol.blocks = p.blocks;
  sol.x = weighted(Vector::Ones(p.z.cols()), 0);
  double prev = l21_norm(sol.x);
  sol.objective_trace.push_back(prev);
  sol.residual_trace.push_back(residual(p, sol.x).norm());

  for (int it = 1; it <= config.max_iter; ++it) {
    Matrix next = weighted(row_weights(sol.x, config.epsilon), it);
    if (!next.allFinite()) throw SolverBreakdown(it, "non-finite iterate");
    const double obj = l21_norm(next);
    sol.x = std::move(next);
    sol.iterations = it;
    sol.objective_trace.push_back(obj);
    sol.residual_trace.push_back(residual(p, sol.x).norm());
    const double change = std::abs(prev - obj);
    prev = obj;
    if (change <= config.tol * std::max(obj, std::numeric_limits<double>::min())) break;
  }
  sol.feasibility_residual = sol.residual_trace.back();
  return sol;
}

}  // namespace

Matrix min_norm_feasible(const L21Problem& problem) {
  check_shapes(problem);
  const WeightedSolve f = has_block_structure(problem) ? structured_solver(problem) : dense_solver(problem);
  return f(Vector::Ones(problem.z.cols()), 0);
}

L21Solution solve(const L21Problem& problem, const L21Config& config) {
  if (has_block_structure(problem)) return run(problem, config, structured_solver(problem));
  return run(problem, config, dense_solver(problem));
}

L21Solution solve_dense(const L21Problem& problem, const L21Config& config) {
  return run(problem, config, dense_solver(problem));
}

L21Solution solve_direct(const L21Problem& problem) {
  check_shapes(problem);
  if (problem.z.rows() != problem.z.cols()) throw InvalidInput("solve_direct: Z must be square");
  Eigen::FullPivLU<Matrix> lu(problem.z);
  if (!lu.isInvertible()) throw SolverBreakdown(1, "Z is singular");
  L21Solution sol;
  sol.x = lu.solve(problem.b);
  sol.iterations = 1;
  sol.objective_trace.push_back(l21_norm(sol.x));
  sol.feasibility_residual = (problem.b - problem.z * sol.x).norm();
  sol.residual_trace.push_back(sol.feasibility_residual);
  sol.blocks = problem.blocks;
  return sol;
}

Coupling extract_pq(const L21Solution& solution, const L21Config& config) {
  if (!solution.blocks) throw StateError("extract_pq: solution carries no block sizes");
  const auto& bs = *solution.blocks;
  if (solution.x.rows() != bs.n + bs.d + bs.tail || bs.tail != 1) {
    throw StateError("extract_pq: solution rows do not match recorded blocks");
  }
  Coupling c;
  c.e = solution.x.topRows(bs.n);
  c.p = solution.x.middleRows(bs.n, bs.d);
  c.q = solution.x.row(bs.n + bs.d) / config.delta;
  return c;
}

}  // namespace fbptf::l21
