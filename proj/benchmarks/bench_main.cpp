#include <benchmark/benchmark.h>

#include <random>

#include "fbptf/image.hpp"
#include "fbptf/l21.hpp"
#include "fbptf/model.hpp"
#include "fbptf/synthetic.hpp"

using namespace fbptf;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Engine& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

// Synthetic deltas with features, N images by D = L.
struct Problem {
  DeltaTensor data;
  Matrix f;
  model::ModelDims dims;
};

Problem synthetic_problem(std::size_t n, std::size_t l) {
  synthetic::SyntheticConfig sc;
  sc.n = n;
  sc.l = l;
  const auto ds = synthetic::generate(sc);
  Problem p{DeltaTensor(n, sc.m, sc.k), ds.f, {n, sc.m, sc.k, l}};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < sc.m; ++j)
      for (std::size_t k = 0; k < sc.k; ++k) {
        const auto kk = static_cast<Eigen::Index>(k), ii = static_cast<Eigen::Index>(i);
        p.data.set(i, j, k, ds.a_prime[j](kk, ii) - ds.a(kk, ii));
      }
  return p;
}

}  // namespace

static void BM_L21Solve(benchmark::State& state) {
  const auto n = state.range(0), d = state.range(1);
  Engine gen(1);
  const l21::L21Config cfg;
  const auto prob = l21::assemble_problem(gaussian(d, n, gen), gaussian(d, n, gen), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(l21::solve(prob, cfg).x.data());
}
BENCHMARK(BM_L21Solve)->Args({20, 15})->Args({200, 50})->Args({667, 50})->Unit(benchmark::kMillisecond);

static void BM_GibbsSweep(benchmark::State& state) {
  const auto p = synthetic_problem(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const auto hyper = model::HyperPriorConfig::standard(p.dims.d);
  const model::TrainConfig tc;
  const RngStream root(tc.seed);
  auto [s, h] = model::init_state(p.dims, p.f, hyper, root.child("init"));
  int sweep = 0;
  for (auto _ : state) model::gibbs_sweep(s, h, p.data, p.f, hyper, tc, ++sweep, root);
}
BENCHMARK(BM_GibbsSweep)->Args({200, 20})->Args({667, 50})->Unit(benchmark::kMillisecond);

static void BM_ExtractFeatures(benchmark::State& state) {
  const auto img = image::procedural_image(RngStream(1), static_cast<std::size_t>(state.range(0)),
                                           static_cast<std::size_t>(state.range(1)));
  const image::FeatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(image::extract_features(img, cfg).data());
}
BENCHMARK(BM_ExtractFeatures)->Args({96, 72})->Args({640, 480});

static void BM_ApplyParams(benchmark::State& state) {
  const auto img = image::procedural_image(RngStream(2));
  auto target = image::measure_params(img);
  target.brightness *= 1.2;
  target.contrast *= 0.9;
  for (auto _ : state) benchmark::DoNotOptimize(image::apply_params(img, target).rounds);
}
BENCHMARK(BM_ApplyParams);
BENCHMARK_MAIN();
