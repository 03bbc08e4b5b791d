#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fbptf/baselines.hpp"
#include "support.hpp"

using namespace fbptf;
using namespace fbptf::baselines;
using fbptf::test_support::gaussian;

namespace {

double correlation(const Vector& a, const Vector& b) {
  const Vector x = a.array() - a.mean();
  const Vector y = b.array() - b.mean();
  return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

// Low-rank raw parameters: row i, slot j, parameter k = <u_i, w_jk>.
MaskedTensor low_rank_rows(std::size_t n, std::size_t slots, std::size_t k, std::size_t rank, Engine& gen) {
  const Matrix u = gaussian(rank, n, gen);
  const Matrix w = gaussian(rank, slots * k, gen);
  MaskedTensor t(n, slots, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < slots; ++j)
      for (std::size_t kk = 0; kk < k; ++kk)
        t.set(i, j, kk, u.col(static_cast<Eigen::Index>(i)).dot(w.col(static_cast<Eigen::Index>(j * k + kk))));
  return t;
}

double masked_rmse(const std::vector<double>& pred, const MaskedTensor& truth) {
  double ss = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth.mask()[i]) {
      ss += std::pow(pred[i] - truth.values()[i], 2);
      ++c;
    }
  return std::sqrt(ss / static_cast<double>(c));
}

}  // namespace

TEST(Mlr, ExactLinearIsInterpolated) {
  Engine gen(1);
  const Matrix x = gaussian(4, 20, gen);
  const Matrix c = gaussian(4, 3, gen);
  const Vector b = gaussian(3, 1, gen).col(0);
  Matrix y = c.transpose() * x;
  y.colwise() += b;
  const auto lm = mlr_fit(x, y);
  EXPECT_LE((lm.predict(x) - y).norm(), 1e-8);
  EXPECT_TRUE(lm.coef.isApprox(c, 1e-10));
  EXPECT_TRUE(lm.intercept.isApprox(b, 1e-10));
}

TEST(Mlr, ConstantInputPredictsMean) {
  Engine gen(2);
  const Matrix x = Matrix::Constant(1, 8, 2.5);
  const Matrix y = gaussian(3, 8, gen);
  const auto lm = mlr_fit(x, y);
  const Matrix pred = lm.predict(Matrix::Constant(1, 1, 2.5));
  EXPECT_TRUE(pred.col(0).isApprox(y.rowwise().mean(), 1e-12));
}

TEST(Mlr, MatchesNormalEquations) {
  Engine gen(3);
  const Matrix x = gaussian(3, 10, gen);
  const Matrix y = gaussian(2, 10, gen);
  Matrix design(10, 4);
  design.leftCols(3) = x.transpose();
  design.col(3).setOnes();
  const Matrix beta = (design.transpose() * design).ldlt().solve(design.transpose() * y.transpose());
  const auto lm = mlr_fit(x, y);
  EXPECT_LT((lm.coef - beta.topRows(3)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((lm.intercept - beta.row(3).transpose()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Mlr, ZeroInterceptPredictionIsLinear) {
  Engine gen(4);
  const Matrix x = gaussian(3, 12, gen);
  const Matrix y = gaussian(3, 3, gen).transpose() * x;
  const auto lm = mlr_fit(x, y);
  const Matrix q = gaussian(3, 1, gen);
  EXPECT_LT((lm.predict(2.5 * q) - 2.5 * lm.predict(q)).norm(), 1e-10);
}

TEST(Mlr, RejectsMismatch) {
  EXPECT_THROW(mlr_fit(Matrix::Zero(2, 3), Matrix::Zero(1, 4)), InvalidInput);
  EXPECT_THROW(mlr_fit(Matrix::Zero(2, 0), Matrix::Zero(1, 0)), InvalidInput);
}

TEST(Wknn, ExactMatchWithOneNeighbour) {
  Engine gen(5);
  const Matrix x = gaussian(3, 6, gen);
  const Matrix y = gaussian(4, 6, gen);
  BaselineSpec spec;
  spec.k = 1;
  EXPECT_TRUE(wknn_predict(x.col(2), x, y, spec).isApprox(y.col(2), 0.0));
}

TEST(Wknn, EquidistantPairAverages) {
  const Matrix x{{-1.0, 1.0, 5.0}};
  const Matrix y{{2.0, 4.0, 100.0}};
  BaselineSpec spec;
  spec.k = 2;
  EXPECT_NEAR(wknn_predict(Vector::Zero(1), x, y, spec)[0], 3.0, 1e-12);
}

TEST(Wknn, SixPointHandOracle) {
  Matrix x(2, 6);
  x << 1.0, 0.0, 3.0, -0.5, 10.0, 6.0,  //
      0.0, 2.0, 4.0, 0.0, 10.0, 8.0;
  const Matrix y{{1.0, 2.0, 3.0, 4.0, 5.0, 6.0}};
  BaselineSpec spec;
  spec.k = 3;
  // nearest: d = 0.5 (target 4), 1 (target 1), 2 (target 2)
  const double e = 1e-8;
  const double w1 = 1.0 / (0.5 + e), w2 = 1.0 / (1.0 + e), w3 = 1.0 / (2.0 + e);
  const double expected = (4.0 * w1 + 1.0 * w2 + 2.0 * w3) / (w1 + w2 + w3);
  EXPECT_NEAR(wknn_predict(Vector::Zero(2), x, y, spec)[0], expected, 1e-12);
}

TEST(Wknn, TranslationInvariant) {
  Engine gen(6);
  const Matrix x = gaussian(4, 30, gen);
  const Matrix y = gaussian(3, 30, gen);
  const Vector q = gaussian(4, 1, gen).col(0);
  const Vector shift = Vector::Constant(4, 3.0);
  const BaselineSpec spec;
  const Vector a = wknn_predict(q, x, y, spec);
  const Vector b = wknn_predict(q + shift, x.colwise() + shift, y, spec);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Wknn, KLargerThanTrainingSet) {
  const Matrix x{{0.0, 1.0}};
  const Matrix y{{1.0, 3.0}};
  BaselineSpec spec;
  spec.k = 10;
  const double w0 = 1.0 / (0.25 + 1e-8), w1 = 1.0 / (0.75 + 1e-8);
  EXPECT_NEAR(wknn_predict(Vector::Constant(1, 0.25), x, y, spec)[0], (w0 + 3.0 * w1) / (w0 + w1), 1e-12);
  EXPECT_THROW(wknn_predict(Vector::Zero(1), Matrix(1, 0), Matrix(1, 0), spec), InvalidInput);
}

TEST(FoldInBaselines, DeterministicUnderSeed) {
  Engine gen(7);
  auto data = low_rank_rows(12, 3, 2, 2, gen);
  data.hide(11, 1, 0);
  data.hide(11, 2, 1);
  BaselineSpec spec;
  spec.latent_dim = 3;
  spec.sweeps = 6;
  spec.burn_in = 2;
  EXPECT_EQ(bpmf_train_predict(data, spec).prediction, bpmf_train_predict(data, spec).prediction);
  EXPECT_EQ(dbptf_train_predict(data, spec).prediction, dbptf_train_predict(data, spec).prediction);
}

TEST(FoldInBaselines, MaskedCellsIgnored) {
  Engine gen(8);
  auto data = low_rank_rows(12, 3, 2, 2, gen);
  for (std::size_t j = 1; j < 3; ++j)
    for (std::size_t k = 0; k < 2; ++k) data.hide(10, j, k);
  BaselineSpec spec;
  spec.latent_dim = 3;
  spec.sweeps = 6;
  spec.burn_in = 2;
  const auto a = dbptf_train_predict(data, spec);
  data.value(10, 2, 1) = 1e9;
  const auto b = dbptf_train_predict(data, spec);
  EXPECT_EQ(a.prediction, b.prediction);
}

TEST(FoldInBaselines, DuplicateRowBorrowsVersions) {
  Engine gen(9);
  const std::size_t n = 20, slots = 4, k = 3;
  auto data = low_rank_rows(n, slots, k, 2, gen);
  // row 19 repeats row 3 and observes only slot 0
  MaskedTensor truth(n, slots, k);
  for (std::size_t j = 0; j < slots; ++j)
    for (std::size_t kk = 0; kk < k; ++kk) {
      data.set(19, j, kk, data.value(3, j, kk));
      if (j > 0) {
        truth.set(19, j, kk, data.value(3, j, kk));
        data.hide(19, j, kk);
      }
    }
  BaselineSpec spec;
  spec.latent_dim = 2;
  spec.sweeps = 60;
  spec.burn_in = 20;
  const auto res = bpmf_train_predict(data, spec, truth);
  Vector pred((slots - 1) * k), ref((slots - 1) * k);
  for (std::size_t j = 1; j < slots; ++j)
    for (std::size_t kk = 0; kk < k; ++kk) {
      pred[static_cast<Eigen::Index>((j - 1) * k + kk)] = res.prediction[data.offset(19, j, kk)];
      ref[static_cast<Eigen::Index>((j - 1) * k + kk)] = data.value(3, j, kk);
    }
  EXPECT_GT(correlation(pred, ref), 0.9);
  ASSERT_FALSE(res.rmse_trace.empty());
  EXPECT_TRUE(res.rmse_trace.back().validation.has_value());
}

TEST(FoldInBaselines, NoTrainingRowsGivesPriorScalePredictions) {
  Engine gen(10);
  const std::size_t n = 15;
  MaskedTensor data(n, 4, 3);
  // Centered slot-0 values: the version means are pooled with the observed
  // columns through mu_V, so an offset there would carry over.
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 3; ++k) data.set(i, 0, k, u(gen));
  BaselineSpec spec;
  spec.latent_dim = 3;
  spec.sweeps = 20;
  spec.burn_in = 5;
  const auto res = bpmf_train_predict(data, spec);
  double mean = 0.0, max_abs = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 1; j < 4; ++j)
      for (std::size_t k = 0; k < 3; ++k) {
        const double v = res.prediction[data.offset(i, j, k)];
        mean += v;
        max_abs = std::max(max_abs, std::abs(v));
        ++c;
      }
  EXPECT_LT(std::abs(mean / static_cast<double>(c)), 0.1);
  EXPECT_LT(max_abs, 1.0);
}

TEST(FoldInBaselines, RankOneThreeWayMatchesUnfoldedMatrix) {
  // With K = 1 the unfolding is the tensor itself and D = 1 makes T a scalar
  // absorbed into V, so both samplers fit the same model.
  Engine gen(11);
  const std::size_t n = 40, slots = 5;
  auto data = low_rank_rows(n, slots, 1, 1, gen);
  MaskedTensor truth(n, slots, 1);
  std::bernoulli_distribution hide(0.2);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < slots; ++j) {
      data.value(i, j, 0) += noise(gen);
      if (hide(gen)) {
        truth.set(i, j, 0, data.value(i, j, 0));
        data.hide(i, j, 0);
      }
    }
  BaselineSpec spec;
  spec.latent_dim = 1;
  spec.sweeps = 200;
  spec.burn_in = 50;
  const double a = masked_rmse(bpmf_train_predict(data, spec).prediction, truth);
  const double b = masked_rmse(dbptf_train_predict(data, spec).prediction, truth);
  EXPECT_NEAR(b, a, 0.02 * a);
}
