#include "fbptf/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "fbptf/io.hpp"

namespace fbptf::model {

namespace {

std::string snapshot_name(char what, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c_%04zu.csv", what, index + 1);
  return buf;
}

std::uint64_t parse_uint(const std::map<std::string, std::string>& kv, const std::string& key,
                         const std::string& file) {
  auto it = kv.find(key);
  if (it == kv.end()) throw SchemaError(file, 0, 0, "missing key '" + key + "'");
  std::uint64_t v = 0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw SchemaError(file, 0, 0, "key '" + key + "' is not a non-negative integer: '" + s + "'");
  }
  return v;
}

bool parse_flag(const std::map<std::string, std::string>& kv, const std::string& key, bool fallback,
                const std::string& file) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "1" || it->second == "true") return true;
  if (it->second == "0" || it->second == "false") return false;
  throw SchemaError(file, 0, 0, "key '" + key + "' must be true or false");
}

Matrix load_shaped(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols) {
  Matrix m = io::read_matrix_csv(path);
  if (m.rows() != rows || m.cols() != cols) {
    throw SchemaError(path.string(), 0, 0,
                      "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", found " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return m;
}

}  // namespace

std::string curves_csv(const std::vector<RmsePoint>& trace) {
  std::string out = "sweep,train_rmse,val_rmse\n";
  for (const auto& p : trace) {
    out += std::to_string(p.sweep) + "," + io::format_double(p.train) + ",";
    if (p.validation) out += io::format_double(*p.validation);
    out += "\n";
  }
  return out;
}

std::vector<RmsePoint> parse_curves_csv(const std::string& text, const std::string& file) {
  std::vector<RmsePoint> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "sweep,train_rmse,val_rmse") throw SchemaError(file, 1, 1, "unexpected header");
      continue;
    }
    if (line.empty()) continue;
    auto cells = io::split_csv_line(line);
    if (cells.size() != 3) throw SchemaError(file, lineno, cells.size(), "expected 3 columns");
    RmsePoint p;
    p.sweep = static_cast<int>(io::parse_cell(cells[0], file, lineno, 1));
    p.train = io::parse_cell(cells[1], file, lineno, 2);
    if (!cells[2].empty()) p.validation = io::parse_cell(cells[2], file, lineno, 3);
    out.push_back(p);
  }
  return out;
}

void save_model(const TrainedModel& model, const std::filesystem::path& dir) {
  model.validate();
  std::filesystem::create_directories(dir);
  for (std::size_t s = 0; s < model.samples.size(); ++s) {
    const Snapshot& snap = model.samples[s];
    io::write_matrix_csv(dir / snapshot_name('P', s), snap.p);
    io::write_matrix_csv(dir / snapshot_name('Q', s), Matrix(snap.q));
    io::write_matrix_csv(dir / snapshot_name('V', s), snap.v);
    io::write_matrix_csv(dir / snapshot_name('T', s), snap.t);
  }
  io::write_atomic(dir / "curves.csv", curves_csv(model.rmse_trace));
  io::write_atomic(dir / "manifest.txt",
                   io::format_key_values({
                       {"format_version", std::to_string(kModelFormatVersion)},
                       {"N", std::to_string(model.dims.n)},
                       {"M", std::to_string(model.dims.m)},
                       {"K", std::to_string(model.dims.k)},
                       {"D", std::to_string(model.dims.d)},
                       {"sweeps", std::to_string(model.sweeps)},
                       {"burn_in", std::to_string(model.burn_in)},
                       {"seed", std::to_string(model.seed)},
                       {"snapshot_count", std::to_string(model.samples.size())},
                       {"feature_coupling", model.feature_coupling ? "true" : "false"},
                       {"params_in_features", model.params_in_features ? "true" : "false"},
                   }));
}

TrainedModel load_model(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  if (!std::filesystem::exists(manifest_path)) {
    throw InvalidInput("not a model directory (no manifest.txt): " + dir.string());
  }
  const std::string file = manifest_path.string();
  const auto kv = io::read_key_values(manifest_path);
  const auto version = parse_uint(kv, "format_version", file);
  if (version != kModelFormatVersion) {
    throw SchemaError(file, 0, 0, "unsupported format_version " + std::to_string(version));
  }
  TrainedModel m;
  m.dims = ModelDims{parse_uint(kv, "N", file), parse_uint(kv, "M", file), parse_uint(kv, "K", file),
                     parse_uint(kv, "D", file)};
  m.dims.validate();
  m.sweeps = static_cast<int>(parse_uint(kv, "sweeps", file));
  m.burn_in = static_cast<int>(parse_uint(kv, "burn_in", file));
  m.seed = parse_uint(kv, "seed", file);
  m.feature_coupling = parse_flag(kv, "feature_coupling", true, file);
  m.params_in_features = parse_flag(kv, "params_in_features", false, file);
  const auto count = parse_uint(kv, "snapshot_count", file);
  if (count == 0) throw SchemaError(file, 0, 0, "snapshot_count must be positive");

  const auto d = static_cast<Eigen::Index>(m.dims.d);
  const auto mm = static_cast<Eigen::Index>(m.dims.m);
  const auto kk = static_cast<Eigen::Index>(m.dims.k);
  m.samples.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Snapshot snap;
    snap.p = load_shaped(dir / snapshot_name('P', s), d, d);
    snap.q = load_shaped(dir / snapshot_name('Q', s), 1, d);
    snap.v = load_shaped(dir / snapshot_name('V', s), d, mm);
    snap.t = load_shaped(dir / snapshot_name('T', s), d, kk);
    m.samples.push_back(std::move(snap));
  }
  if (std::filesystem::exists(dir / "curves.csv")) {
    const auto curves = dir / "curves.csv";
    m.rmse_trace = parse_curves_csv(io::read_text(curves), curves.string());
  }
  m.validate();
  return m;
}

}  // namespace fbptf::model
