#include "fbptf/dataset.hpp"

#include <charconv>
#include <sstream>

#include "fbptf/io.hpp"

namespace fbptf::data {

void ParameterDataset::validate() const {
  const auto n = a.cols();
  if (n == 0 || a.rows() == 0) throw InvalidInput("dataset has no images or no parameters");
  if (f.cols() != n) {
    throw InvalidInput("dimension mismatch: " + std::to_string(f.cols()) + " feature rows vs " + std::to_string(n) +
                       " parameter rows");
  }
  if (a_prime.empty()) throw InvalidInput("dataset has no versions");
  for (std::size_t j = 0; j < a_prime.size(); ++j) {
    if (a_prime[j].rows() != a.rows() || a_prime[j].cols() != n) {
      throw InvalidInput("version " + std::to_string(j + 1) + " has shape inconsistent with params");
    }
    require_finite(a_prime[j], "version parameters");
  }
  require_finite(a, "params");
  require_finite(f, "features");
  if (ids.size() != static_cast<std::size_t>(n)) throw InvalidInput("dataset ids do not match the image count");
}

DeltaTensor ParameterDataset::delta(const std::vector<std::size_t>& rows) const {
  DeltaTensor t(rows.size(), m(), k());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(rows[r]);
    for (std::size_t j = 0; j < m(); ++j)
      for (std::size_t kk = 0; kk < k(); ++kk) {
        const auto kr = static_cast<Eigen::Index>(kk);
        t.set(r, j, kk, a_prime[j](kr, i) - a(kr, i));
      }
  }
  return t;
}

Matrix ParameterDataset::inputs(const std::vector<std::size_t>& rows, bool with_params) const {
  const Eigen::Index off = with_params ? a.rows() : 0;
  Matrix out(off + f.rows(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto c = static_cast<Eigen::Index>(r);
    const auto i = static_cast<Eigen::Index>(rows[r]);
    if (with_params) out.col(c).head(off) = a.col(i);
    out.col(c).tail(f.rows()) = f.col(i);
  }
  return out;
}

Matrix ParameterDataset::stacked_targets(const std::vector<std::size_t>& rows) const {
  const auto kk = a.rows();
  Matrix out(static_cast<Eigen::Index>(m()) * kk, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < m(); ++j)
      out.col(static_cast<Eigen::Index>(r)).segment(static_cast<Eigen::Index>(j) * kk, kk) =
          a_prime[j].col(static_cast<Eigen::Index>(rows[r]));
  return out;
}

ParameterDataset ParameterDataset::subset(const std::vector<std::size_t>& rows) const {
  ParameterDataset out;
  out.manifest = manifest;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.a.resize(a.rows(), n);
  out.f.resize(f.rows(), n);
  out.a_prime.assign(m(), Matrix(a.rows(), n));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto c = static_cast<Eigen::Index>(r);
    const auto i = static_cast<Eigen::Index>(rows[r]);
    out.a.col(c) = a.col(i);
    out.f.col(c) = f.col(i);
    for (std::size_t j = 0; j < m(); ++j) out.a_prime[j].col(c) = a_prime[j].col(i);
    out.ids.push_back(ids[rows[r]]);
  }
  return out;
}

FoldIn fold_in(const ParameterDataset& ds, const std::vector<std::size_t>& train,
               const std::vector<std::size_t>& test) {
  const std::size_t n = train.size() + test.size();
  FoldIn out{MaskedTensor(n, ds.m() + 1, ds.k()), MaskedTensor(n, ds.m() + 1, ds.k()), train.size()};
  for (std::size_t r = 0; r < n; ++r) {
    const bool is_test = r >= train.size();
    const auto i = static_cast<Eigen::Index>(is_test ? test[r - train.size()] : train[r]);
    for (std::size_t kk = 0; kk < ds.k(); ++kk) {
      const auto kr = static_cast<Eigen::Index>(kk);
      out.observed.set(r, 0, kk, ds.a(kr, i));
      for (std::size_t j = 0; j < ds.m(); ++j) {
        const double v = ds.a_prime[j](kr, i);
        (is_test ? out.held_out : out.observed).set(r, j + 1, kk, v);
      }
    }
  }
  return out;
}

ParameterDataset from_synthetic(const synthetic::SyntheticDataset& s, const synthetic::SyntheticConfig& cfg) {
  ParameterDataset ds;
  ds.a = s.a;
  ds.a_prime = s.a_prime;
  ds.f = s.f;
  for (std::size_t i = 0; i < cfg.n; ++i) ds.ids.push_back(std::to_string(i));
  ds.manifest = {
      {"source", "synthetic"},
      {"seed", std::to_string(cfg.seed)},
      {"eta", io::format_double(cfg.eta)},
      {"norm_scale", io::format_double(cfg.effective_norm_scale())},
      {"r1_range", io::format_double(cfg.ranges.r1.lo) + ":" + io::format_double(cfg.ranges.r1.hi)},
      {"r2_range", io::format_double(cfg.ranges.r2.lo) + ":" + io::format_double(cfg.ranges.r2.hi)},
      {"r3_range", io::format_double(cfg.ranges.r3.lo) + ":" + io::format_double(cfg.ranges.r3.hi)},
  };
  return ds;
}

namespace {

const char* const kDimKeys[] = {"N", "K", "L", "M"};

std::size_t manifest_dim(const std::map<std::string, std::string>& kv, const std::string& key,
                         const std::string& file) {
  auto it = kv.find(key);
  if (it == kv.end()) throw SchemaError(file, 0, 0, "missing key '" + key + "'");
  std::size_t v = 0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v == 0) {
    throw SchemaError(file, 0, 0, "key '" + key + "' must be a positive integer, got '" + s + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& cell, const std::string& file, std::size_t line, std::size_t col) {
  std::size_t v = 0;
  auto b = cell.find_first_not_of(' ');
  auto e = cell.find_last_not_of(" \r");
  if (b == std::string::npos) throw SchemaError(file, line, col, "empty index");
  auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e + 1, v);
  if (ec != std::errc() || ptr != cell.data() + e + 1) throw SchemaError(file, line, col, "not an index: '" + cell + "'");
  return v;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const ParameterDataset& ds) {
  ds.validate();
  std::filesystem::create_directories(dir);
  io::write_matrix_csv(dir / "features.csv", ds.f.transpose());
  io::write_matrix_csv(dir / "params.csv", ds.a.transpose());
  std::string versions;
  for (std::size_t i = 0; i < ds.n(); ++i)
    for (std::size_t j = 0; j < ds.m(); ++j) {
      versions += std::to_string(i) + "," + std::to_string(j + 1);
      for (Eigen::Index kk = 0; kk < ds.a.rows(); ++kk) {
        versions += "," + io::format_double(ds.a_prime[j](kk, static_cast<Eigen::Index>(i)));
      }
      versions += "\n";
    }
  io::write_atomic(dir / "versions.csv", versions);
  std::string ids;
  for (const auto& id : ds.ids) ids += id + "\n";
  io::write_atomic(dir / "ids.txt", ids);

  std::vector<std::pair<std::string, std::string>> entries = {
      {"N", std::to_string(ds.n())}, {"K", std::to_string(ds.k())},
      {"L", std::to_string(ds.l())}, {"M", std::to_string(ds.m())}};
  for (const auto& [key, value] : ds.manifest) {
    if (key != "N" && key != "K" && key != "L" && key != "M") entries.emplace_back(key, value);
  }
  io::write_atomic(dir / "manifest.txt", io::format_key_values(entries));
}

ParameterDataset load_dataset(const std::filesystem::path& dir) {
  for (const char* name : {"manifest.txt", "params.csv", "versions.csv", "features.csv"}) {
    if (!std::filesystem::exists(dir / name)) {
      throw InvalidInput("dataset directory " + dir.string() + " lacks " + name);
    }
  }
  const std::string mfile = (dir / "manifest.txt").string();
  ParameterDataset ds;
  ds.manifest = io::read_key_values(dir / "manifest.txt");
  const std::size_t n = manifest_dim(ds.manifest, "N", mfile);
  const std::size_t k = manifest_dim(ds.manifest, "K", mfile);
  const std::size_t l = manifest_dim(ds.manifest, "L", mfile);
  const std::size_t m = manifest_dim(ds.manifest, "M", mfile);
  for (const char* key : kDimKeys) ds.manifest.erase(key);

  const Matrix params = io::read_matrix_csv(dir / "params.csv");
  const Matrix features = io::read_matrix_csv(dir / "features.csv");
  if (static_cast<std::size_t>(features.rows()) != static_cast<std::size_t>(params.rows())) {
    throw InvalidInput("dimension mismatch: features.csv has " + std::to_string(features.rows()) +
                       " rows but params.csv has " + std::to_string(params.rows()));
  }
  if (static_cast<std::size_t>(params.rows()) != n) {
    throw InvalidInput("dimension mismatch: params.csv has " + std::to_string(params.rows()) +
                       " rows, manifest says N = " + std::to_string(n));
  }
  if (static_cast<std::size_t>(params.cols()) != k) {
    throw InvalidInput("dimension mismatch: params.csv has " + std::to_string(params.cols()) +
                       " columns, manifest says K = " + std::to_string(k));
  }
  if (static_cast<std::size_t>(features.cols()) != l) {
    throw InvalidInput("dimension mismatch: features.csv has " + std::to_string(features.cols()) +
                       " columns, manifest says L = " + std::to_string(l));
  }
  ds.a = params.transpose();
  ds.f = features.transpose();

  const std::string vfile = (dir / "versions.csv").string();
  ds.a_prime.assign(m, Matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)));
  std::vector<std::uint8_t> seen(n * m, 0);
  std::istringstream in(io::read_text(dir / "versions.csv"));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != k + 2) {
      throw SchemaError(vfile, lineno, cells.size(), "expected " + std::to_string(k + 2) + " columns");
    }
    const std::size_t i = parse_index(cells[0], vfile, lineno, 1);
    const std::size_t j = parse_index(cells[1], vfile, lineno, 2);
    if (i >= n) throw SchemaError(vfile, lineno, 1, "image_id " + std::to_string(i) + " out of range");
    if (j < 1 || j > m) throw SchemaError(vfile, lineno, 2, "version_id " + std::to_string(j) + " outside 1.." + std::to_string(m));
    if (seen[i * m + j - 1]) {
      throw SchemaError(vfile, lineno, 1, "duplicate row for image " + std::to_string(i) + ", version " + std::to_string(j));
    }
    seen[i * m + j - 1] = 1;
    for (std::size_t kk = 0; kk < k; ++kk) {
      ds.a_prime[j - 1](static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(i)) =
          io::parse_cell(cells[kk + 2], vfile, lineno, kk + 3);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (!seen[i * m + j]) {
        throw InvalidInput(vfile + ": missing row for image " + std::to_string(i) + ", version " + std::to_string(j + 1));
      }

  if (std::filesystem::exists(dir / "ids.txt")) {
    std::istringstream ids(io::read_text(dir / "ids.txt"));
    while (std::getline(ids, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) ds.ids.push_back(line);
    }
    if (ds.ids.size() != n) {
      throw InvalidInput("dimension mismatch: ids.txt lists " + std::to_string(ds.ids.size()) + " ids, expected " +
                         std::to_string(n));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) ds.ids.push_back(std::to_string(i));
  }
  ds.validate();
  return ds;
}

}  // namespace fbptf::data
