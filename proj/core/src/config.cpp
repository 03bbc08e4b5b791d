#include "fbptf/config.hpp"

#include <charconv>
#include <functional>

#include "fbptf/io.hpp"

namespace fbptf::harness {

model::HyperPriorConfig PriorSettings::expand(std::size_t d) const {
  model::HyperPriorConfig h = model::HyperPriorConfig::standard(d);
  const auto dd = static_cast<Eigen::Index>(d);
  h.gw.mu0 = Vector::Constant(dd, mu0);
  h.gw.beta0 = beta0;
  h.gw.w0 = w0_scale * Matrix::Identity(dd, dd);
  h.gw.nu0 = static_cast<double>(d) + nu0_offset;
  h.alpha_scale = alpha_scale;
  h.alpha_dof = alpha_dof;
  h.sigma2_init = sigma2_init;
  h.alpha_init = alpha_init;
  h.validate(d);
  return h;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::fbptf: return "fbptf";
    case ModelKind::bpmf: return "bpmf";
    case ModelKind::dbptf: return "dbptf";
    case ModelKind::mlr: return "mlr";
    case ModelKind::wknn: return "wknn";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "fbptf") return ModelKind::fbptf;
  if (name == "bpmf") return ModelKind::bpmf;
  if (name == "dbptf") return ModelKind::dbptf;
  if (name == "mlr") return ModelKind::mlr;
  if (name == "wknn") return ModelKind::wknn;
  throw InvalidInput("unknown model '" + name + "' (expected fbptf, bpmf, dbptf, mlr or wknn)");
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw InvalidInput("setting '" + key + "': '" + value + "' is not " + what);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

Vector to_vector(const std::string& key, const std::string& v) {
  auto cells = io::split_csv_line(v);
  Vector out(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string c = cells[i];
    c.erase(0, c.find_first_not_of(' '));
    c.erase(c.find_last_not_of(' ') + 1);
    out[static_cast<Eigen::Index>(i)] = to_double(key, c);
  }
  return out;
}

std::string fmt(double v) { return io::format_double(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define FBPTF_DOUBLE(KEY, MEMBER)                                                              \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_double(KEY, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.MEMBER); }}
#define FBPTF_INT(KEY, MEMBER, TYPE)                                                               \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_int<TYPE>(KEY, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }}
#define FBPTF_BOOL(KEY, MEMBER)                                                              \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_bool(KEY, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.MEMBER); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"dataset", [](ExperimentConfig& c, const std::string& v) { c.dataset = v; },
            [](const ExperimentConfig& c) { return c.dataset.string(); }},
      Field{"output", [](ExperimentConfig& c, const std::string& v) { c.output = v; },
            [](const ExperimentConfig& c) { return c.output.string(); }},
      Field{"model", [](ExperimentConfig& c, const std::string& v) { c.model = parse_model_kind(v); },
            [](const ExperimentConfig& c) { return to_string(c.model); }},
      FBPTF_DOUBLE("prior.mu0", prior.mu0),
      FBPTF_DOUBLE("prior.beta0", prior.beta0),
      FBPTF_DOUBLE("prior.w0_scale", prior.w0_scale),
      FBPTF_DOUBLE("prior.nu0_offset", prior.nu0_offset),
      FBPTF_DOUBLE("prior.alpha_scale", prior.alpha_scale),
      FBPTF_DOUBLE("prior.alpha_dof", prior.alpha_dof),
      FBPTF_DOUBLE("prior.sigma2_init", prior.sigma2_init),
      FBPTF_DOUBLE("prior.alpha_init", prior.alpha_init),
      FBPTF_INT("train.sweeps", train.sweeps, int),
      FBPTF_INT("train.burn_in", train.burn_in, int),
      FBPTF_INT("train.seed", train.seed, std::uint64_t),
      FBPTF_BOOL("train.feature_coupling", train.feature_coupling),
      FBPTF_INT("train.track_rmse_every", train.track_rmse_every, int),
      FBPTF_BOOL("train.append_params", append_params),
      FBPTF_DOUBLE("l21.beta", train.l21.beta),
      FBPTF_DOUBLE("l21.delta", train.l21.delta),
      FBPTF_DOUBLE("l21.epsilon", train.l21.epsilon),
      FBPTF_INT("l21.max_iter", train.l21.max_iter, int),
      FBPTF_DOUBLE("l21.tol", train.l21.tol),
      FBPTF_BOOL("clip.enabled", clip),
      Field{"clip.lambda", [](ExperimentConfig& c, const std::string& v) { c.clip_cfg.lambda = to_vector("clip.lambda", v); },
            [](const ExperimentConfig& c) { return fmt(c.clip_cfg.lambda); }},
      Field{"clip.zeta", [](ExperimentConfig& c, const std::string& v) { c.clip_cfg.zeta = to_vector("clip.zeta", v); },
            [](const ExperimentConfig& c) { return fmt(c.clip_cfg.zeta); }},
      FBPTF_INT("baseline.latent_dim", baseline.latent_dim, std::size_t),
      FBPTF_INT("baseline.sweeps", baseline.sweeps, int),
      FBPTF_INT("baseline.burn_in", baseline.burn_in, int),
      FBPTF_INT("baseline.k", baseline.k, std::size_t),
      FBPTF_DOUBLE("baseline.distance_epsilon", baseline.distance_epsilon),
      FBPTF_INT("baseline.seed", baseline.seed, std::uint64_t),
      FBPTF_INT("split.folds", split.folds, std::size_t),
      FBPTF_INT("split.train", split.train, std::size_t),
      FBPTF_INT("split.val", split.val, std::size_t),
      FBPTF_INT("split.test", split.test, std::size_t),
      FBPTF_INT("split.seed", split.seed, std::uint64_t),
      FBPTF_BOOL("output.save_models", save_models),
  };
  return table;
}

#undef FBPTF_DOUBLE
#undef FBPTF_INT
#undef FBPTF_BOOL

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw InvalidInput("unknown setting '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw InvalidInput("no dataset given");
  if (!std::filesystem::is_directory(dataset)) throw InvalidInput("dataset directory does not exist: " + dataset.string());
  if (output.empty()) throw InvalidInput("no output directory given");
  train.validate();
  train.l21.validate();
  baseline.validate();
  if (!split.cross_validation()) {
    if (split.folds == 1) throw InvalidInput("split.folds = 1 is not a split; use >= 2 or 0 with train/val/test");
    if (split.train == 0 || split.test == 0) throw InvalidInput("split: train and test counts must be positive");
  }
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (file) {
    for (const auto& [k, v] : io::read_key_values(*file)) apply_setting(cfg, k, v);
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw InvalidInput("override '" + o + "' is not key=value");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    apply_setting(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace fbptf::harness
