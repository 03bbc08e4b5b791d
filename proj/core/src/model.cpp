#include "fbptf/model.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fbptf::model {

void ModelDims::validate() const {
  if (n == 0 || m == 0 || k == 0 || d == 0) throw InvalidInput("model dims must all be positive");
}

HyperPriorConfig HyperPriorConfig::standard(std::size_t d) {
  HyperPriorConfig c;
  c.gw = GaussianWishartPrior::standard(static_cast<Eigen::Index>(d));
  return c;
}

void HyperPriorConfig::validate(std::size_t d) const {
  gw.validate();
  if (gw.dim() != d) throw InvalidInput("hyper prior dimension " + std::to_string(gw.dim()) + " != D " + std::to_string(d));
  if (!(alpha_scale > 0.0) || !(alpha_dof > 0.0)) throw InvalidInput("alpha prior must be positive");
  if (!(sigma2_init > 0.0) || !(alpha_init > 0.0)) throw InvalidInput("initial variance and alpha must be positive");
}

void TrainConfig::validate() const {
  if (sweeps < 1) throw InvalidInput("train: sweeps must be >= 1");
  if (burn_in < 0 || burn_in >= sweeps) throw InvalidInput("train: burn_in must be in [0, sweeps)");
  if (track_rmse_every < 1) throw InvalidInput("train: track_rmse_every must be >= 1");
  l21.validate();
}

void GibbsWorkspace::reset(std::size_t d, std::size_t cells) {
  const auto dd = static_cast<Eigen::Index>(d);
  y.resize(dd, static_cast<Eigen::Index>(cells));
  r.resize(static_cast<Eigen::Index>(cells));
  lambda.resize(dd, dd);
  rhs.resize(dd);
}

void TrainedModel::validate() const {
  dims.validate();
  if (samples.empty()) throw StateError("trained model has no retained samples");
  const auto d = static_cast<Eigen::Index>(dims.d);
  for (const auto& s : samples) {
    if (s.p.rows() != d || s.p.cols() != d || s.q.size() != d || s.v.rows() != d ||
        s.v.cols() != static_cast<Eigen::Index>(dims.m) || s.t.rows() != d ||
        s.t.cols() != static_cast<Eigen::Index>(dims.k)) {
      throw StateError("snapshot shape inconsistent with model dims");
    }
  }
}

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd, Engine& gen) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(gen);
  return m;
}

void check_data(const ModelDims& dims, const DeltaTensor& data) {
  if (data.n() != dims.n || data.m() != dims.m || data.k() != dims.k) {
    throw InvalidInput("tensor shape " + std::to_string(data.n()) + "x" + std::to_string(data.m()) + "x" +
                       std::to_string(data.k()) + " does not match model dims");
  }
}

ColumnConditional finish_conditional(const Matrix& prior_lambda, const Vector& prior_mu, double alpha,
                                     GibbsWorkspace& ws, Eigen::Index cells) {
  ColumnConditional c;
  ws.lambda = prior_lambda;
  ws.rhs = prior_lambda * prior_mu;
  if (cells > 0) {
    const auto y = ws.y.leftCols(cells);
    ws.lambda.noalias() += alpha * (y * y.transpose());
    ws.rhs.noalias() += alpha * (y * ws.r.head(cells));
  }
  c.precision = 0.5 * (ws.lambda + ws.lambda.transpose());
  const Matrix l = cholesky_jittered(c.precision);
  Vector mean = l.triangularView<Eigen::Lower>().solve(ws.rhs);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(mean);
  c.mean = std::move(mean);
  return c;
}

Vector draw(const ColumnConditional& c, const RngStream& stream) {
  Engine gen = stream.engine();
  return sample_mvn(c.mean, c.precision, gen);
}

// Runs fn(index, workspace) for every index, possibly in parallel. Each index
// owns its RNG substream, so the result does not depend on scheduling.
template <typename Fn>
void parallel_columns(std::size_t count, Fn&& fn) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel
  {
    GibbsWorkspace ws;
#pragma omp for schedule(static)
    for (long long idx = 0; idx < static_cast<long long>(count); ++idx) {
      try {
        fn(static_cast<std::size_t>(idx), ws);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// j-major products V_j o T_k as columns, D x (M*K).
Matrix version_parameter_products(const Matrix& v, const Matrix& t) {
  Matrix vt(v.rows(), v.cols() * t.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (Eigen::Index k = 0; k < t.cols(); ++k) vt.col(j * t.cols() + k) = v.col(j).cwiseProduct(t.col(k));
  return vt;
}

double masked_rmse(const Matrix& pred_rows, const DeltaTensor& data) {
  // pred_rows is n x (M*K) with the tensor's flat layout row by row
  double ss = 0.0;
  std::size_t count = 0;
  const std::size_t mk = data.m() * data.k();
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t c = 0; c < mk; ++c) {
      const std::size_t off = i * mk + c;
      if (!data.mask()[off]) continue;
      const double r = pred_rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) - data.values()[off];
      ss += r * r;
      ++count;
    }
  if (count == 0) throw InvalidInput("rmse: mask has no observed cells");
  return std::sqrt(ss / static_cast<double>(count));
}

}  // namespace

std::pair<LatentState, HyperState> init_state(const ModelDims& dims, const std::optional<Matrix>& features,
                                              const HyperPriorConfig& cfg, const RngStream& stream,
                                              bool fix_t_ones) {
  dims.validate();
  const auto d = static_cast<Eigen::Index>(dims.d);
  const auto n = static_cast<Eigen::Index>(dims.n);
  if (features && (features->rows() != d || features->cols() != n)) {
    throw InvalidInput("init_state: features are " + std::to_string(features->rows()) + "x" +
                       std::to_string(features->cols()) + ", expected " + std::to_string(d) + "x" + std::to_string(n));
  }
  Engine gen = stream.engine();
  const double sd = std::sqrt(cfg.sigma2_init);
  LatentState s;
  s.v = gaussian_matrix(d, static_cast<Eigen::Index>(dims.m), sd, gen);
  s.t = fix_t_ones ? Matrix::Ones(d, static_cast<Eigen::Index>(dims.k))
                   : gaussian_matrix(d, static_cast<Eigen::Index>(dims.k), sd, gen);
  s.q = RowVector::Zero(d);
  if (features) {
    s.p = gaussian_matrix(d, d, sd, gen);
    reconstruct_u(s, *features);
    s.u = s.u_hat;
  } else {
    s.p = Matrix::Zero(d, d);
    s.u = gaussian_matrix(d, n, sd, gen);
    s.u_hat = s.u;
  }

  HyperState h;
  h.alpha = cfg.alpha_init;
  h.mu_u = h.mu_v = h.mu_t = Vector::Zero(d);
  h.lambda_u = h.lambda_v = h.lambda_t = Matrix::Identity(d, d);
  return {std::move(s), std::move(h)};
}

void reconstruct_u(LatentState& state, const Matrix& features) {
  const Matrix ut = features.transpose() * state.p + Vector::Ones(features.cols()) * state.q;
  state.u_hat = ut.transpose();
}

AlphaPosterior alpha_posterior(const LatentState& state, const DeltaTensor& data, const HyperPriorConfig& cfg) {
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t j = 0; j < data.m(); ++j)
      for (std::size_t k = 0; k < data.k(); ++k) {
        if (!data.observed(i, j, k)) continue;
        const double r = data.value(i, j, k) - cp_inner(state.u_hat.col(static_cast<Eigen::Index>(i)),
                                                        state.v.col(static_cast<Eigen::Index>(j)),
                                                        state.t.col(static_cast<Eigen::Index>(k)));
        ss += r * r;
        ++count;
      }
  AlphaPosterior post;
  post.dof = cfg.alpha_dof + static_cast<double>(count);
  post.scale = 1.0 / (1.0 / cfg.alpha_scale + ss);
  return post;
}

double sample_alpha(const LatentState& state, const DeltaTensor& data, const HyperPriorConfig& cfg,
                    const RngStream& stream) {
  const AlphaPosterior post = alpha_posterior(state, data, cfg);
  Engine gen = stream.engine();
  // 1x1 Wishart(scale, dof) is scale * chi2(dof)
  std::chi_squared_distribution<double> chi2(post.dof);
  return post.scale * chi2(gen);
}

void sample_theta(const Matrix& columns, const GaussianWishartPrior& prior, const RngStream& stream, Vector& mu,
                  Matrix& lambda) {
  const GaussianWishartPosterior post = gw_posterior(prior, columns);
  Engine gen = stream.engine();
  lambda = sample_wishart(post.w_star, post.nu_star, gen);
  mu = sample_mvn(post.mu_star, post.beta_star * lambda, gen);
}

HyperState sample_thetas(const LatentState& state, const HyperState& current, const HyperPriorConfig& cfg,
                         const RngStream& stream) {
  HyperState h = current;
  sample_theta(state.u_hat, cfg.gw, stream.child("U"), h.mu_u, h.lambda_u);
  sample_theta(state.v, cfg.gw, stream.child("V"), h.mu_v, h.lambda_v);
  sample_theta(state.t, cfg.gw, stream.child("T"), h.mu_t, h.lambda_t);
  return h;
}

ColumnConditional u_conditional(std::size_t i, const LatentState& state, const HyperState& hyper,
                                const DeltaTensor& data, GibbsWorkspace& ws) {
  if (i >= data.n()) throw InvalidInput("u_conditional: image index out of range");
  const auto d = static_cast<std::size_t>(state.v.rows());
  ws.reset(d, data.m() * data.k());
  Eigen::Index cells = 0;
  for (std::size_t j = 0; j < data.m(); ++j)
    for (std::size_t k = 0; k < data.k(); ++k) {
      if (!data.observed(i, j, k)) continue;
      ws.y.col(cells) = state.v.col(static_cast<Eigen::Index>(j)).cwiseProduct(state.t.col(static_cast<Eigen::Index>(k)));
      ws.r[cells] = data.value(i, j, k);
      ++cells;
    }
  return finish_conditional(hyper.lambda_u, hyper.mu_u, hyper.alpha, ws, cells);
}

ColumnConditional v_conditional(std::size_t j, const LatentState& state, const HyperState& hyper,
                                const DeltaTensor& data, GibbsWorkspace& ws) {
  if (j >= data.m()) throw InvalidInput("v_conditional: version index out of range");
  const auto d = static_cast<std::size_t>(state.v.rows());
  ws.reset(d, data.n() * data.k());
  Eigen::Index cells = 0;
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t k = 0; k < data.k(); ++k) {
      if (!data.observed(i, j, k)) continue;
      ws.y.col(cells) =
          state.u_hat.col(static_cast<Eigen::Index>(i)).cwiseProduct(state.t.col(static_cast<Eigen::Index>(k)));
      ws.r[cells] = data.value(i, j, k);
      ++cells;
    }
  return finish_conditional(hyper.lambda_v, hyper.mu_v, hyper.alpha, ws, cells);
}

ColumnConditional t_conditional(std::size_t k, const LatentState& state, const HyperState& hyper,
                                const DeltaTensor& data, GibbsWorkspace& ws) {
  if (k >= data.k()) throw InvalidInput("t_conditional: parameter index out of range");
  const auto d = static_cast<std::size_t>(state.v.rows());
  ws.reset(d, data.n() * data.m());
  Eigen::Index cells = 0;
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t j = 0; j < data.m(); ++j) {
      if (!data.observed(i, j, k)) continue;
      ws.y.col(cells) =
          state.u_hat.col(static_cast<Eigen::Index>(i)).cwiseProduct(state.v.col(static_cast<Eigen::Index>(j)));
      ws.r[cells] = data.value(i, j, k);
      ++cells;
    }
  return finish_conditional(hyper.lambda_t, hyper.mu_t, hyper.alpha, ws, cells);
}

Vector sample_u_column(std::size_t i, const LatentState& state, const HyperState& hyper, const DeltaTensor& data,
                       GibbsWorkspace& ws, const RngStream& stream) {
  return draw(u_conditional(i, state, hyper, data, ws), stream);
}

Vector sample_v_column(std::size_t j, const LatentState& state, const HyperState& hyper, const DeltaTensor& data,
                       GibbsWorkspace& ws, const RngStream& stream) {
  return draw(v_conditional(j, state, hyper, data, ws), stream);
}

Vector sample_t_column(std::size_t k, const LatentState& state, const HyperState& hyper, const DeltaTensor& data,
                       GibbsWorkspace& ws, const RngStream& stream) {
  return draw(t_conditional(k, state, hyper, data, ws), stream);
}

void gibbs_sweep(LatentState& state, HyperState& hyper, const DeltaTensor& data,
                 const std::optional<Matrix>& features, const HyperPriorConfig& hyper_cfg,
                 const TrainConfig& train_cfg, int sweep_index, const RngStream& root) {
  const RngStream sweep = root.child("sweep", static_cast<std::uint64_t>(sweep_index));
  try {
    hyper.alpha = sample_alpha(state, data, hyper_cfg, sweep.child("alpha"));
    hyper = sample_thetas(state, hyper, hyper_cfg, sweep.child("theta"));

    Matrix u_next(state.u.rows(), state.u.cols());
    parallel_columns(data.n(), [&](std::size_t i, GibbsWorkspace& ws) {
      u_next.col(static_cast<Eigen::Index>(i)) =
          sample_u_column(i, state, hyper, data, ws, sweep.child("U", i));
    });
    state.u = std::move(u_next);

    if (train_cfg.feature_coupling) {
      if (!features) throw InvalidInput("feature coupling requires a feature matrix");
      const l21::L21Problem prob = l21::assemble_problem(*features, state.u, train_cfg.l21);
      const l21::L21Solution sol = l21::solve(prob, train_cfg.l21);
      const l21::Coupling c = l21::extract_pq(sol, train_cfg.l21);
      state.p = c.p;
      state.q = c.q;
      reconstruct_u(state, *features);
    } else {
      state.u_hat = state.u;
    }

    Matrix v_next(state.v.rows(), state.v.cols());
    parallel_columns(data.m(), [&](std::size_t j, GibbsWorkspace& ws) {
      v_next.col(static_cast<Eigen::Index>(j)) =
          sample_v_column(j, state, hyper, data, ws, sweep.child("V", j));
    });
    state.v = std::move(v_next);

    if (!train_cfg.fix_t_ones) {
      Matrix t_next(state.t.rows(), state.t.cols());
      parallel_columns(data.k(), [&](std::size_t k, GibbsWorkspace& ws) {
        t_next.col(static_cast<Eigen::Index>(k)) =
            sample_t_column(k, state, hyper, data, ws, sweep.child("T", k));
      });
      state.t = std::move(t_next);
    }
  } catch (const NumericalFailure& e) {
    throw NumericalFailure("sweep " + std::to_string(sweep_index) + ": " + e.what());
  }
}

TrainedModel train(const DeltaTensor& data, const std::optional<Matrix>& features, const ModelDims& dims,
                   const HyperPriorConfig& hyper_cfg, const TrainConfig& train_cfg,
                   const std::optional<Validation>& validation) {
  dims.validate();
  train_cfg.validate();
  hyper_cfg.validate(dims.d);
  check_data(dims, data);
  if (data.observed_count() == 0) throw InvalidInput("train: training mask has no observed cells");
  if (train_cfg.feature_coupling && !features) throw InvalidInput("train: feature coupling requires features");
  if (features) require_finite(*features, "features");
  if (validation) {
    if (validation->data.m() != dims.m || validation->data.k() != dims.k) {
      throw InvalidInput("validation tensor shape does not match model dims");
    }
    if (validation->features) {
      if (validation->features->rows() != static_cast<Eigen::Index>(dims.d) ||
          validation->features->cols() != static_cast<Eigen::Index>(validation->data.n())) {
        throw InvalidInput("validation features shape does not match");
      }
    } else if (validation->data.n() != dims.n) {
      throw InvalidInput("in-sample validation must index the training rows");
    }
  }

  const RngStream root(train_cfg.seed);
  auto [state, hyper] = init_state(dims, train_cfg.feature_coupling ? features : std::nullopt, hyper_cfg,
                                   root.child("init"), train_cfg.fix_t_ones);

  TrainedModel model;
  model.dims = dims;
  model.feature_coupling = train_cfg.feature_coupling;
  model.seed = train_cfg.seed;
  model.sweeps = train_cfg.sweeps;
  model.burn_in = train_cfg.burn_in;

  const auto n = static_cast<Eigen::Index>(dims.n);
  const auto mk = static_cast<Eigen::Index>(dims.m * dims.k);
  Matrix train_sum = Matrix::Zero(n, mk);
  Matrix val_sum;
  const bool val_new_rows = validation && validation->features.has_value();
  if (val_new_rows) val_sum = Matrix::Zero(static_cast<Eigen::Index>(validation->data.n()), mk);
  int retained = 0;

  for (int y = 1; y <= train_cfg.sweeps; ++y) {
    gibbs_sweep(state, hyper, data, features, hyper_cfg, train_cfg, y, root);

    const Matrix vt = version_parameter_products(state.v, state.t);
    const Matrix train_cur = state.u_hat.transpose() * vt;
    Matrix val_cur;
    if (val_new_rows) {
      const Matrix uv = (validation->features->transpose() * state.p).rowwise() + state.q;
      val_cur = uv * vt;
    }
    const bool keep = y > train_cfg.burn_in;
    if (keep) {
      model.samples.push_back(Snapshot{state.p, state.q, state.v, state.t});
      train_sum += train_cur;
      if (val_new_rows) val_sum += val_cur;
      ++retained;
    }

    if (y % train_cfg.track_rmse_every == 0 || y == train_cfg.sweeps) {
      const Matrix train_pred = keep ? Matrix(train_sum / retained) : train_cur;
      RmsePoint pt;
      pt.sweep = y;
      pt.train = masked_rmse(train_pred, data);
      if (validation) {
        if (val_new_rows) {
          const Matrix val_pred = keep ? Matrix(val_sum / retained) : val_cur;
          pt.validation = masked_rmse(val_pred, validation->data);
        } else {
          pt.validation = masked_rmse(train_pred, validation->data);
        }
      }
      model.rmse_trace.push_back(pt);
    }
  }

  const Matrix mean = train_sum / std::max(retained, 1);
  model.in_sample_mean.resize(dims.n * dims.m * dims.k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < mk; ++c) model.in_sample_mean[static_cast<std::size_t>(i * mk + c)] = mean(i, c);
  return model;
}

Matrix predict_delta_batch(const TrainedModel& model, const Matrix& features, std::size_t count) {
  if (model.samples.empty()) throw StateError("predict: model has no retained samples");
  if (features.rows() != static_cast<Eigen::Index>(model.dims.d)) {
    throw InvalidInput("predict: feature length " + std::to_string(features.rows()) + " != model D " +
                       std::to_string(model.dims.d));
  }
  count = std::min(count, model.samples.size());
  if (count == 0) throw InvalidInput("predict: zero samples requested");
  const auto mk = static_cast<Eigen::Index>(model.dims.m * model.dims.k);
  Matrix sum = Matrix::Zero(features.cols(), mk);
  for (std::size_t s = 0; s < count; ++s) {
    const Snapshot& snap = model.samples[s];
    const Matrix uv = (features.transpose() * snap.p).rowwise() + snap.q;
    sum += uv * version_parameter_products(snap.v, snap.t);
  }
  return sum / static_cast<double>(count);
}

Matrix predict_delta_batch(const TrainedModel& model, const Matrix& features) {
  return predict_delta_batch(model, features, model.samples.size());
}

Matrix predict_delta(const TrainedModel& model, const Vector& features) {
  const Matrix row = predict_delta_batch(model, features);
  const auto m = static_cast<Eigen::Index>(model.dims.m);
  const auto k = static_cast<Eigen::Index>(model.dims.k);
  Matrix out(m, k);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index kk = 0; kk < k; ++kk) out(j, kk) = row(0, j * k + kk);
  return out;
}

Matrix predict(const TrainedModel& model, const Vector& features, const Vector& params) {
  if (params.size() != static_cast<Eigen::Index>(model.dims.k)) {
    throw InvalidInput("predict: parameter vector length does not match K");
  }
  Matrix out = predict_delta(model, features);
  out.rowwise() += params.transpose();
  return out;
}

ClipConfig ClipConfig::enhancement_defaults() {
  ClipConfig c;
  c.lambda = Vector{{0.4, 0.4, 0.05}};
  c.zeta = Vector{{0.3, 0.3, 0.01}};
  return c;
}

void ClipConfig::validate(std::size_t k) const {
  if (lambda.size() != static_cast<Eigen::Index>(k) || zeta.size() != static_cast<Eigen::Index>(k)) {
    throw InvalidInput("clip: multiplier vectors must have K entries");
  }
  if ((lambda.array() < 0.0).any() || (zeta.array() < 0.0).any()) {
    throw InvalidInput("clip: multipliers must be non-negative");
  }
}

Matrix clip(const Matrix& pred, const Vector& params, const ClipConfig& cfg) {
  if (pred.cols() != params.size()) throw InvalidInput("clip: prediction columns must match K");
  cfg.validate(static_cast<std::size_t>(params.size()));
  Matrix out = pred;
  for (Eigen::Index j = 0; j < out.rows(); ++j)
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
      const double a = params[k];
      double v = std::min(out(j, k), a + cfg.lambda[k] * a);
      v = std::max(v, a - cfg.zeta[k] * a);
      out(j, k) = v;
    }
  return out;
}

}  // namespace fbptf::model
