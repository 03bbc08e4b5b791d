#include "fbptf/baselines.hpp"

#include <algorithm>
#include <numeric>

namespace fbptf::baselines {

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::bpmf: return "bpmf";
    case Kind::dbptf: return "dbptf";
    case Kind::mlr: return "mlr";
    case Kind::wknn: return "wknn";
  }
  return "?";
}

Kind parse_kind(const std::string& name) {
  if (name == "bpmf") return Kind::bpmf;
  if (name == "dbptf") return Kind::dbptf;
  if (name == "mlr") return Kind::mlr;
  if (name == "wknn") return Kind::wknn;
  throw InvalidInput("unknown baseline kind '" + name + "' (expected bpmf, dbptf, mlr or wknn)");
}

void BaselineSpec::validate() const {
  if (k < 1) throw InvalidInput("baseline: k must be >= 1");
  if (latent_dim < 1) throw InvalidInput("baseline: latent_dim must be >= 1");
  if (!(distance_epsilon > 0.0)) throw InvalidInput("baseline: distance_epsilon must be positive");
  if (sweeps < 1 || burn_in < 0 || burn_in >= sweeps) throw InvalidInput("baseline: need 0 <= burn_in < sweeps");
}

namespace {

FoldInResult run_factor_model(const MaskedTensor& data, const BaselineSpec& spec, bool fix_t_ones,
                              const std::optional<MaskedTensor>& validation) {
  spec.validate();
  model::ModelDims dims{data.n(), data.m(), data.k(), spec.latent_dim};
  auto hyper = model::HyperPriorConfig::standard(spec.latent_dim);
  model::TrainConfig tc;
  tc.sweeps = spec.sweeps;
  tc.burn_in = spec.burn_in;
  tc.seed = spec.seed;
  tc.feature_coupling = false;
  tc.fix_t_ones = fix_t_ones;
  std::optional<model::Validation> val;
  if (validation) val = model::Validation{*validation, std::nullopt};
  model::TrainedModel m = model::train(data, std::nullopt, dims, hyper, tc, val);
  return FoldInResult{std::move(m.in_sample_mean), std::move(m.rmse_trace)};
}

// N x (M+1) x K viewed as N x ((M+1) K) x 1; the flat layout is unchanged.
MaskedTensor unfold(const MaskedTensor& t) {
  MaskedTensor out(t.n(), t.m() * t.k(), 1);
  out.values() = t.values();
  out.mask() = t.mask();
  return out;
}

}  // namespace

FoldInResult bpmf_train_predict(const FoldInTensor& data, const BaselineSpec& spec,
                                const std::optional<MaskedTensor>& validation) {
  std::optional<MaskedTensor> val;
  if (validation) val = unfold(*validation);
  return run_factor_model(unfold(data), spec, true, val);
}

FoldInResult dbptf_train_predict(const FoldInTensor& data, const BaselineSpec& spec,
                                 const std::optional<MaskedTensor>& validation) {
  return run_factor_model(data, spec, false, validation);
}

Matrix LinearModel::predict(const Matrix& x) const {
  if (x.rows() != coef.rows()) throw InvalidInput("mlr: input dimension mismatch");
  Matrix y = coef.transpose() * x;
  y.colwise() += intercept;
  return y;
}

LinearModel mlr_fit(const Matrix& x, const Matrix& y) {
  if (x.cols() < 1) throw InvalidInput("mlr: need at least one sample");
  if (x.cols() != y.cols()) throw InvalidInput("mlr: inputs and targets have different sample counts");
  const Eigen::Index p = x.rows();
  Matrix design(x.cols(), p + 1);
  design.leftCols(p) = x.transpose();
  design.col(p).setOnes();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
  const Matrix beta = cod.solve(y.transpose());  // (p+1) x q
  LinearModel out;
  out.coef = beta.topRows(p);
  out.intercept = beta.row(p).transpose();
  return out;
}

Vector wknn_predict(const Vector& query, const Matrix& train_inputs, const Matrix& train_targets,
                    const BaselineSpec& spec) {
  if (train_inputs.cols() == 0) throw InvalidInput("wknn: empty training set");
  if (train_inputs.cols() != train_targets.cols()) throw InvalidInput("wknn: inputs and targets differ in count");
  if (query.size() != train_inputs.rows()) throw InvalidInput("wknn: query dimension mismatch");
  if (spec.k < 1) throw InvalidInput("wknn: k must be >= 1");
  const auto n = static_cast<std::size_t>(train_inputs.cols());
  const std::size_t k = std::min(spec.k, n);

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = (train_inputs.col(static_cast<Eigen::Index>(i)) - query).norm();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });

  Vector acc = Vector::Zero(train_targets.rows());
  double wsum = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    const double w = 1.0 / (dist[i] + spec.distance_epsilon);
    acc += w * train_targets.col(static_cast<Eigen::Index>(i));
    wsum += w;
  }
  return acc / wsum;
}

}  // namespace fbptf::baselines
