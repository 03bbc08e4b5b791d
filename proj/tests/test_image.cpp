#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "fbptf/image.hpp"
#include "fbptf/model.hpp"
#include "support.hpp"

using namespace fbptf;
using namespace fbptf::image;
using fbptf::test_support::TempDir;

namespace {

ImageRGB solid(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ImageRGB img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      img.at(x, y)[0] = r;
      img.at(x, y)[1] = g;
      img.at(x, y)[2] = b;
    }
  return img;
}

// S = (max - min) / max, V = max / 255, written out per pixel.
ImageParams params_by_hand(const ImageRGB& img) {
  std::vector<double> s, v;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.pixels[i * 3];
    const double mx = std::max({p[0], p[1], p[2]});
    const double mn = std::min({p[0], p[1], p[2]});
    v.push_back(mx / 255.0);
    s.push_back(mx == 0.0 ? 0.0 : (mx - mn) / mx);
  }
  double ms = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    ms += s[i];
    mv += v[i];
  }
  ms /= static_cast<double>(v.size());
  mv /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mv) * (x - mv);
  return {ms, mv, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

TEST(ImageMeasure, MidGray) {
  const auto p = measure_params(solid(8, 8, 128, 128, 128));
  EXPECT_EQ(p.saturation, 0.0);
  EXPECT_NEAR(p.brightness, 128.0 / 255.0, 1e-15);
  EXPECT_EQ(p.contrast, 0.0);
}

TEST(ImageMeasure, HalfBlackHalfWhite) {
  ImageRGB img = solid(10, 4, 0, 0, 0);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 5; x < 10; ++x) std::fill(img.at(x, y), img.at(x, y) + 3, 255);
  const auto p = measure_params(img);
  EXPECT_DOUBLE_EQ(p.brightness, 0.5);
  EXPECT_DOUBLE_EQ(p.contrast, 0.5);
  EXPECT_EQ(p.saturation, 0.0);
}

TEST(ImageMeasure, FourByFourCard) {
  const std::uint8_t card[16][3] = {{255, 0, 0},     {0, 255, 0},    {0, 0, 255},     {255, 255, 0},
                                    {0, 255, 255},   {255, 0, 255},  {128, 64, 32},   {10, 20, 30},
                                    {200, 200, 200}, {0, 0, 0},      {255, 255, 255}, {90, 180, 45},
                                    {17, 34, 250},   {250, 128, 5},  {60, 60, 61},    {140, 10, 200}};
  ImageRGB img(4, 4);
  for (std::size_t i = 0; i < 16; ++i) std::copy(card[i], card[i] + 3, &img.pixels[i * 3]);
  const auto got = measure_params(img);
  const auto ref = params_by_hand(img);
  EXPECT_NEAR(got.saturation, ref.saturation, 1e-6);
  EXPECT_NEAR(got.brightness, ref.brightness, 1e-6);
  EXPECT_NEAR(got.contrast, ref.contrast, 1e-6);
}

TEST(ImageHsv, KnownColoursAndRoundTrip) {
  const Hsv red = rgb_to_hsv(255, 0, 0);
  EXPECT_DOUBLE_EQ(red.h, 0.0);
  EXPECT_DOUBLE_EQ(red.s, 1.0);
  const Hsv blue = rgb_to_hsv(0, 0, 255);
  EXPECT_NEAR(blue.h, 2.0 / 3.0, 1e-15);
  for (int r = 0; r < 256; r += 15)
    for (int g = 0; g < 256; g += 17)
      for (int b = 0; b < 256; b += 51) {
        double rr, gg, bb;
        hsv_to_rgb(rgb_to_hsv(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)),
                   rr, gg, bb);
        EXPECT_NEAR(rr * 255.0, r, 1e-9);
        EXPECT_NEAR(gg * 255.0, g, 1e-9);
        EXPECT_NEAR(bb * 255.0, b, 1e-9);
      }
}

TEST(ImageFeatures, LengthAndHistogramMass) {
  const FeatureConfig cfg;
  EXPECT_EQ(cfg.length(), 1709u);
  const ImageRGB img = procedural_image(RngStream(1));
  const Vector f = extract_features(img, cfg);
  ASSERT_EQ(f.size(), 1709);
  EXPECT_NEAR(f.head(1274).sum(), 1.0, 1e-9);
  EXPECT_GE(f.head(1274).minCoeff(), 0.0);
  const auto p = measure_params(img);
  EXPECT_DOUBLE_EQ(f[1706], p.saturation);
  EXPECT_DOUBLE_EQ(f[1707], p.brightness);
  EXPECT_DOUBLE_EQ(f[1708], p.contrast);
}

TEST(ImageFeatures, UniformGrayHasNoLocalSpreadOrSaturation) {
  const Vector f = extract_features(solid(48, 36, 90, 90, 90));
  const Vector local_v = f.segment(1274, 144);
  const Vector local_s = f.segment(1274 + 144, 144);
  const Vector local_c = f.segment(1274 + 288, 144);
  EXPECT_TRUE(local_s.isZero(0.0));
  EXPECT_TRUE(local_c.isZero(0.0));
  EXPECT_NEAR(local_v.mean(), 90.0 / 255.0, 1e-12);
}

TEST(ImageFeatures, DeterministicAndRejectsTinyImages) {
  const ImageRGB img = procedural_image(RngStream(2));
  ImageRGB copy = img;
  EXPECT_TRUE(extract_features(img).isApprox(extract_features(copy), 0.0));
  EXPECT_THROW(extract_features(solid(11, 30, 1, 2, 3)), InvalidInput);
}

TEST(ImageApply, MeasuredTargetIsNearIdentity) {
  const ImageRGB img = procedural_image(RngStream(3));
  const auto p = measure_params(img);
  const auto res = apply_params(img, p);
  EXPECT_TRUE(res.converged());
  EXPECT_NEAR(res.achieved.saturation, p.saturation, 0.01);
  EXPECT_NEAR(res.achieved.brightness, p.brightness, 0.01);
  EXPECT_NEAR(res.achieved.contrast, p.contrast, 0.01);
}

TEST(ImageApply, GrayCannotGainContrast) {
  const ImageRGB img = solid(16, 16, 100, 100, 100);
  ImageParams target = measure_params(img);
  target.contrast = 0.2;
  const auto res = apply_params(img, target);
  EXPECT_FALSE(res.contrast_converged);
  EXPECT_FALSE(res.converged());
  EXPECT_NEAR(res.achieved.contrast, 0.0, 1e-12);
}

TEST(ImageApply, BrightnessStep) {
  const ImageRGB img = procedural_image(RngStream(4));
  ImageParams target = measure_params(img);
  target.brightness += 0.1;
  const auto res = apply_params(img, target, 0.01);
  EXPECT_NEAR(measure_params(res.image).brightness, target.brightness, 0.01);
  EXPECT_NEAR(res.achieved.brightness, measure_params(res.image).brightness, 0.0);
}

TEST(ImageApply, RoundTripInsideClipEnvelope) {
  const auto clip = model::ClipConfig::enhancement_defaults();
  Engine gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int hits = 0, trials = 0;
  for (int i = 0; i < 50; ++i) {
    const ImageRGB img = procedural_image(RngStream(100).child("img", static_cast<std::uint64_t>(i)));
    const Vector a = measure_params(img).as_vector();
    Vector target(3);
    for (int k = 0; k < 3; ++k) {
      const double lo = a[k] * (1.0 - clip.zeta[k]);
      const double hi = a[k] * (1.0 + clip.lambda[k]);
      target[k] = std::min(lo + (hi - lo) * u(gen), 1.0);
    }
    const auto res = apply_params(img, ImageParams::from_vector(target), 0.01);
    const Vector got = measure_params(res.image).as_vector();
    ++trials;
    if ((got - target).cwiseAbs().maxCoeff() <= 0.02) ++hits;
    // a converged axis sits within tol of its target, up to one quantization step
    if (res.saturation_converged) {
      EXPECT_LE(std::abs(got[0] - target[0]), 0.01 + 1.0 / 255.0);
    }
    if (res.brightness_converged) {
      EXPECT_LE(std::abs(got[1] - target[1]), 0.01 + 1.0 / 255.0);
    }
    if (res.contrast_converged) {
      EXPECT_LE(std::abs(got[2] - target[2]), 0.01 + 1.0 / 255.0);
    }
  }
  EXPECT_GE(hits, static_cast<int>(std::ceil(0.95 * trials)));
}

TEST(ImageIo, PngAndPpmRoundTrip) {
  TempDir dir;
  const ImageRGB img = procedural_image(RngStream(6), 40, 30);
  write_png(dir / "a.png", img);
  write_ppm(dir / "a.ppm", img);
  const ImageRGB png = read_image(dir / "a.png");
  const ImageRGB ppm = read_image(dir / "a.ppm");
  EXPECT_EQ(png.width, 40u);
  EXPECT_EQ(png.height, 30u);
  EXPECT_EQ(png.pixels, img.pixels);
  EXPECT_EQ(ppm.pixels, img.pixels);
}

TEST(ImageIo, RejectsGarbage) {
  TempDir dir;
  {
    std::ofstream out(dir / "x.png", std::ios::binary);
    out << "not an image";
  }
  EXPECT_ANY_THROW(read_image(dir / "x.png"));
  EXPECT_ANY_THROW(read_image(dir / "missing.png"));
}
