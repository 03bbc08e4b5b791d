#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fbptf/numerics.hpp"

namespace fbptf::image {

/// 8-bit RGB, row-major, three bytes per pixel.
struct ImageRGB {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  ImageRGB() = default;
  ImageRGB(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}

  std::size_t pixel_count() const noexcept { return width * height; }
  std::uint8_t* at(std::size_t x, std::size_t y) noexcept { return &pixels[(y * width + x) * 3]; }
  const std::uint8_t* at(std::size_t x, std::size_t y) const noexcept { return &pixels[(y * width + x) * 3]; }
  void validate() const;
};

/// Global appearance parameters, each on [0, 1]. Contrast is the population
/// standard deviation of HSV value (so at most 0.5).
struct ImageParams {
  double saturation = 0.0;
  double brightness = 0.0;
  double contrast = 0.0;

  Vector as_vector() const;  ///< (saturation, brightness, contrast)
  static ImageParams from_vector(const Vector& v);
};

struct Hsv {
  double h = 0.0;  ///< [0, 1)
  double s = 0.0;
  double v = 0.0;
};

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);
/// Inverse of rgb_to_hsv on [0, 1] channels (not quantized).
void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b);

ImageParams measure_params(const ImageRGB& img);

struct FeatureConfig {
  std::size_t hue_bins = 26;
  std::size_t sat_bins = 7;
  std::size_t val_bins = 7;
  std::size_t grid_rows = 12;
  std::size_t grid_cols = 12;

  std::size_t histogram_size() const noexcept { return hue_bins * sat_bins * val_bins; }
  std::size_t cells() const noexcept { return grid_rows * grid_cols; }
  std::size_t length() const noexcept { return histogram_size() + 3 * cells() + 3; }
  void validate() const;
};

/// Layout, in order:
///   joint HSV histogram, bin (h * sat_bins + s) * val_bins + v, sums to 1
///   per-cell mean V over the grid (row-major)
///   per-cell mean S
///   per-cell population std of V
///   saturation, brightness, contrast of the whole image
/// Cell (r, c) covers rows [r H / rows, (r + 1) H / rows) and likewise for columns.
Vector extract_features(const ImageRGB& img, const FeatureConfig& cfg = {});

struct ApplyResult {
  ImageRGB image;
  ImageParams achieved;
  bool contrast_converged = false;
  bool brightness_converged = false;
  bool saturation_converged = false;
  int rounds = 0;

  bool converged() const noexcept { return contrast_converged && brightness_converged && saturation_converged; }
};

/// Moves the image's parameters toward `target` with three global operators
/// applied to the input's HSV: V' = mean + c (V - mean) + b, S' = s S, hue
/// kept. Contrast is fitted first (c), then brightness (b) and saturation
/// (s), each by bisection against the re-measured 8-bit output; the three
/// stages repeat until every axis is within `tol` or `max_iter` rounds pass.
/// Unreachable targets (e.g. contrast on a flat image) leave that axis
/// flagged as not converged.
ApplyResult apply_params(const ImageRGB& img, const ImageParams& target, double tol = 0.01, int max_iter = 40);

/// Procedural "photo": a two-colour gradient sky, a handful of shaded
/// ellipses and mild pixel noise, with a random global tone so saturation,
/// brightness and contrast vary across draws. Stands in for natural images
/// in tests and benchmarks.
ImageRGB procedural_image(const RngStream& stream, std::size_t width = 96, std::size_t height = 72);

/// PNG (any bit depth / colour type, alpha dropped) or binary PPM (P6, maxval 255).
ImageRGB read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageRGB& img);
void write_ppm(const std::filesystem::path& path, const ImageRGB& img);

}  // namespace fbptf::image
