#include "fbptf/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>

#include "fbptf/io.hpp"

namespace fbptf::image {

void ImageRGB::validate() const {
  if (width == 0 || height == 0) throw InvalidInput("image has no pixels");
  if (pixels.size() != width * height * 3) throw InvalidInput("image buffer size does not match its dimensions");
}

Vector ImageParams::as_vector() const {
  Vector v(3);
  v << saturation, brightness, contrast;
  return v;
}

ImageParams ImageParams::from_vector(const Vector& v) {
  if (v.size() != 3) throw InvalidInput("image parameters need exactly 3 values");
  return ImageParams{v[0], v[1], v[2]};
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == r) {
      h = (g - b) / delta;
      if (h < 0.0) h += 6.0;
    } else if (mx == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    out.h = h / 6.0;
    if (out.h >= 1.0) out.h -= 1.0;
  }
  return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
  const double h6 = hsv.h * 6.0;
  const double sector = std::floor(h6);
  const double f = h6 - sector;
  const double v = hsv.v;
  const double p = v * (1.0 - hsv.s);
  const double q = v * (1.0 - hsv.s * f);
  const double t = v * (1.0 - hsv.s * (1.0 - f));
  switch (static_cast<int>(sector) % 6) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

ImageParams measure_params(const ImageRGB& img) {
  img.validate();
  // V = max channel / 255. Its moments come from integer sums, so a uniform
  // image has exactly zero spread.
  double sum_s = 0.0, sum_v2 = 0.0;
  std::int64_t sum_max = 0;
  const std::size_t n = img.pixel_count();
  for (std::size_t p = 0; p < n; ++p) {
    const auto* px = &img.pixels[p * 3];
    sum_s += rgb_to_hsv(px[0], px[1], px[2]).s;
    sum_max += std::max({px[0], px[1], px[2]});
  }
  const auto ni = static_cast<std::int64_t>(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto* px = &img.pixels[p * 3];
    const double dv = static_cast<double>(std::max({px[0], px[1], px[2]}) * ni - sum_max);
    sum_v2 += dv * dv;
  }
  const double scale = 255.0 * static_cast<double>(n);
  return ImageParams{sum_s / static_cast<double>(n), static_cast<double>(sum_max) / scale,
                     std::sqrt(sum_v2 / static_cast<double>(n)) / scale};
}

void FeatureConfig::validate() const {
  if (hue_bins == 0 || sat_bins == 0 || val_bins == 0) throw InvalidInput("feature bins must be positive");
  if (grid_rows == 0 || grid_cols == 0) throw InvalidInput("feature grid must be positive");
}

namespace {

std::size_t bin_of(double x, std::size_t bins) {
  return std::min(static_cast<std::size_t>(x * static_cast<double>(bins)), bins - 1);
}

}  // namespace

Vector extract_features(const ImageRGB& img, const FeatureConfig& cfg) {
  img.validate();
  cfg.validate();
  if (img.height < cfg.grid_rows || img.width < cfg.grid_cols) {
    throw InvalidInput("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                       " is smaller than the " + std::to_string(cfg.grid_cols) + "x" +
                       std::to_string(cfg.grid_rows) + " feature grid");
  }
  const std::size_t hist = cfg.histogram_size();
  const std::size_t cells = cfg.cells();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(cfg.length()));

  std::vector<double> cell_v(cells, 0.0), cell_s(cells, 0.0), cell_n(cells, 0.0);
  std::vector<std::int64_t> cell_max(cells, 0);
  for (std::size_t y = 0; y < img.height; ++y) {
    const std::size_t row = y * cfg.grid_rows / img.height;
    for (std::size_t x = 0; x < img.width; ++x) {
      const auto* px = img.at(x, y);
      const Hsv h = rgb_to_hsv(px[0], px[1], px[2]);
      const std::size_t bin =
          (bin_of(h.h, cfg.hue_bins) * cfg.sat_bins + bin_of(h.s, cfg.sat_bins)) * cfg.val_bins + bin_of(h.v, cfg.val_bins);
      out[static_cast<Eigen::Index>(bin)] += 1.0;
      const std::size_t cell = row * cfg.grid_cols + x * cfg.grid_cols / img.width;
      cell_max[cell] += std::max({px[0], px[1], px[2]});
      cell_s[cell] += h.s;
      cell_n[cell] += 1.0;
    }
  }
  out.head(static_cast<Eigen::Index>(hist)) /= static_cast<double>(img.pixel_count());

  for (std::size_t c = 0; c < cells; ++c) {
    cell_v[c] = static_cast<double>(cell_max[c]) / (255.0 * cell_n[c]);
    cell_s[c] /= cell_n[c];
  }
  std::vector<double> cell_var(cells, 0.0);
  for (std::size_t y = 0; y < img.height; ++y) {
    const std::size_t row = y * cfg.grid_rows / img.height;
    for (std::size_t x = 0; x < img.width; ++x) {
      const std::size_t cell = row * cfg.grid_cols + x * cfg.grid_cols / img.width;
      const auto* px = img.at(x, y);
      const double dv =
          static_cast<double>(std::max({px[0], px[1], px[2]}) * static_cast<std::int64_t>(cell_n[cell]) - cell_max[cell]);
      cell_var[cell] += dv * dv;
    }
  }
  auto base = static_cast<Eigen::Index>(hist);
  const auto nc = static_cast<Eigen::Index>(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    out[base + i] = cell_v[c];
    out[base + nc + i] = cell_s[c];
    out[base + 2 * nc + i] = std::sqrt(cell_var[c] / cell_n[c]) / (255.0 * cell_n[c]);
  }
  const ImageParams g = measure_params(img);
  base += 3 * nc;
  out[base] = g.saturation;
  out[base + 1] = g.brightness;
  out[base + 2] = g.contrast;
  return out;
}

namespace {

struct Operators {
  double gain = 1.0;    // contrast: V about its mean
  double offset = 0.0;  // brightness: added to V
  double sat = 1.0;     // saturation: S multiplier
};

class Renderer {
 public:
  explicit Renderer(const ImageRGB& img) : out_(img.width, img.height), hsv_(img.pixel_count()) {
    double sum = 0.0;
    for (std::size_t p = 0; p < hsv_.size(); ++p) {
      const auto* px = &img.pixels[p * 3];
      hsv_[p] = rgb_to_hsv(px[0], px[1], px[2]);
      sum += hsv_[p].v;
    }
    mean_v_ = sum / static_cast<double>(hsv_.size());
  }

  const ImageRGB& render(const Operators& op) {
    for (std::size_t p = 0; p < hsv_.size(); ++p) {
      Hsv h = hsv_[p];
      h.v = std::clamp(mean_v_ + op.gain * (h.v - mean_v_) + op.offset, 0.0, 1.0);
      h.s = std::clamp(op.sat * h.s, 0.0, 1.0);
      double r, g, b;
      hsv_to_rgb(h, r, g, b);
      auto* px = &out_.pixels[p * 3];
      px[0] = static_cast<std::uint8_t>(std::lround(std::clamp(r, 0.0, 1.0) * 255.0));
      px[1] = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 1.0) * 255.0));
      px[2] = static_cast<std::uint8_t>(std::lround(std::clamp(b, 0.0, 1.0) * 255.0));
    }
    return out_;
  }

 private:
  ImageRGB out_;
  std::vector<Hsv> hsv_;
  double mean_v_ = 0.0;
};

// Bisection on a non-decreasing response. Returns the argument whose response
// came closest to the target.
double fit_axis(const std::function<double(double)>& response, double lo, double hi, double target, double tol,
                int max_iter, bool grow_hi) {
  double f_lo = response(lo);
  double f_hi = response(hi);
  while (grow_hi && f_hi < target && hi < 256.0) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    f_hi = response(hi);
  }
  double best = std::abs(f_lo - target) <= std::abs(f_hi - target) ? lo : hi;
  double best_err = std::min(std::abs(f_lo - target), std::abs(f_hi - target));
  if (target <= f_lo || target >= f_hi) return best;
  for (int it = 0; it < max_iter && best_err > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = response(mid);
    if (std::abs(f - target) < best_err) {
      best = mid;
      best_err = std::abs(f - target);
    }
    (f < target ? lo : hi) = mid;
  }
  return best;
}

}  // namespace

ApplyResult apply_params(const ImageRGB& img, const ImageParams& target, double tol, int max_iter) {
  img.validate();
  for (double t : {target.saturation, target.brightness, target.contrast}) {
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("apply_params: targets must lie in [0, 1]");
  }
  if (!(tol > 0.0)) throw InvalidInput("apply_params: tol must be positive");
  if (max_iter < 1) throw InvalidInput("apply_params: max_iter must be >= 1");

  Renderer renderer(img);
  Operators op;
  // Stages aim tighter than the acceptance tolerance so a later stage's
  // small side effects rarely push an earlier axis out.
  const double inner_tol = tol / 4.0;
  ApplyResult result;
  for (int round = 1; round <= max_iter; ++round) {
    const Operators before = op;
    op.gain = fit_axis(
        [&](double g) {
          Operators o = op;
          o.gain = g;
          return measure_params(renderer.render(o)).contrast;
        },
        0.0, 4.0, target.contrast, inner_tol, max_iter, true);
    op.offset = fit_axis(
        [&](double b) {
          Operators o = op;
          o.offset = b;
          return measure_params(renderer.render(o)).brightness;
        },
        -1.0, 1.0, target.brightness, inner_tol, max_iter, false);
    op.sat = fit_axis(
        [&](double s) {
          Operators o = op;
          o.sat = s;
          return measure_params(renderer.render(o)).saturation;
        },
        0.0, 4.0, target.saturation, inner_tol, max_iter, true);

    result.rounds = round;
    result.achieved = measure_params(renderer.render(op));
    result.contrast_converged = std::abs(result.achieved.contrast - target.contrast) <= tol;
    result.brightness_converged = std::abs(result.achieved.brightness - target.brightness) <= tol;
    result.saturation_converged = std::abs(result.achieved.saturation - target.saturation) <= tol;
    if (result.converged()) break;
    if (op.gain == before.gain && op.offset == before.offset && op.sat == before.sat) break;
  }
  result.image = renderer.render(op);
  return result;
}

ImageRGB procedural_image(const RngStream& stream, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw InvalidInput("procedural_image: empty size");
  Engine gen = stream.engine();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto color = [&](double vlo, double vhi) {
    Hsv h{u01(gen), 0.15 + 0.8 * u01(gen), vlo + (vhi - vlo) * u01(gen)};
    double r, g, b;
    hsv_to_rgb(h, r, g, b);
    return std::array<double, 3>{r, g, b};
  };
  // Global tone: dull/vivid, dark/bright, flat/punchy.
  const double tone_v = 0.25 + 0.5 * u01(gen);
  const double tone_spread = 0.15 + 0.35 * u01(gen);
  const auto top = color(tone_v, std::min(1.0, tone_v + tone_spread));
  const auto bottom = color(std::max(0.0, tone_v - tone_spread), tone_v);

  std::vector<double> buf(width * height * 3);
  for (std::size_t y = 0; y < height; ++y) {
    const double t = static_cast<double>(y) / static_cast<double>(std::max<std::size_t>(height - 1, 1));
    for (std::size_t x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) buf[(y * width + x) * 3 + c] = (1.0 - t) * top[c] + t * bottom[c];
  }
  const int blobs = 3 + static_cast<int>(u01(gen) * 5.0);
  for (int k = 0; k < blobs; ++k) {
    const auto col = color(std::max(0.0, tone_v - tone_spread), std::min(1.0, tone_v + tone_spread));
    const double cx = u01(gen) * width, cy = u01(gen) * height;
    const double rx = (0.08 + 0.25 * u01(gen)) * width, ry = (0.08 + 0.25 * u01(gen)) * height;
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        const double r2 = dx * dx + dy * dy;
        if (r2 > 1.0) continue;
        const double shade = 1.0 - 0.35 * r2;
        for (int c = 0; c < 3; ++c) buf[(y * width + x) * 3 + c] = col[c] * shade;
      }
  }
  std::normal_distribution<double> noise(0.0, 0.02);
  ImageRGB img(width, height);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(buf[i] + noise(gen), 0.0, 1.0) * 255.0));
  }
  return img;
}

// ---- file formats ---------------------------------------------------------------

namespace {

ImageRGB read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw InvalidInput("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  ImageRGB img(png.width, png.height);
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw InvalidInput("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return img;
}

ImageRGB read_ppm(const std::filesystem::path& path) {
  const std::string data = io::read_text(path);
  std::size_t pos = 2;
  auto next_token = [&]() -> std::size_t {
    for (;;) {
      while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
      if (pos < data.size() && data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) v = v * 10 + (data[pos++] - '0');
    if (pos == start) throw InvalidInput("malformed PPM header in " + path.string());
    return v;
  };
  const std::size_t w = next_token();
  const std::size_t h = next_token();
  const std::size_t maxval = next_token();
  if (maxval != 255) throw InvalidInput("only 8-bit PPM is supported: " + path.string());
  ++pos;  // single whitespace before the raster
  if (w == 0 || h == 0 || data.size() < pos + w * h * 3) throw InvalidInput("truncated PPM raster in " + path.string());
  ImageRGB img(w, h);
  std::memcpy(img.pixels.data(), data.data() + pos, w * h * 3);
  return img;
}

}  // namespace

ImageRGB read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open image " + path.string());
  unsigned char magic[8] = {};
  in.read(reinterpret_cast<char*>(magic), 8);
  if (in.gcount() >= 8 && png_sig_cmp(magic, 0, 8) == 0) return read_png(path);
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  throw InvalidInput("unsupported image format (expected PNG or binary PPM): " + path.string());
}

void write_png(const std::filesystem::path& path, const ImageRGB& img) {
  img.validate();
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(std::string("PNG encoding failed: ") + png.message);
  }
  std::string buf(size, '\0');
  if (!png_image_write_to_memory(&png, buf.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(std::string("PNG encoding failed: ") + png.message);
  }
  buf.resize(size);
  io::write_atomic(path, buf);
}

void write_ppm(const std::filesystem::path& path, const ImageRGB& img) {
  img.validate();
  std::string buf = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  buf.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  io::write_atomic(path, buf);
}

}  // namespace fbptf::image
