#include <benchmark/benchmark.h>

#include <random>

#include "ocular/critic.h"
#include "ocular/demo_corpus.h"
#include "ocular/guidance.h"
#include "ocular/mapper.h"
#include "ocular/metrics.h"
#include "ocular/pipeline.h"
#include "ocular/prototype_library.h"

using namespace ocular;

namespace {

ControlState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ControlState c{};
  for (std::size_t j = 0; j < kAuCount; ++j) c[j] = 0.4 * u(rng);
  c[Channel::GazeLeft] = u(rng);
  c[Channel::GazeUp] = u(rng);
  c[Channel::Yaw] = 40.0 * (2 * u(rng) - 1);
  c[Channel::Pitch] = 20.0 * (2 * u(rng) - 1);
  c[Channel::Roll] = 10.0 * (2 * u(rng) - 1);
  return c;
}

PrototypeLibrary random_library(std::size_t n) {
  std::mt19937_64 rng(1);
  std::vector<PrototypeRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    PrototypeRecord r;
    r.label = i % 2 ? "a" : "b";
    for (int t = 0; t < 20; ++t) r.controls.frames.push_back(random_state(rng));
    r.keypoints.frames.resize(20);
    recs.push_back(std::move(r));
  }
  return build_library(std::move(recs));
}

void BM_Query(benchmark::State& state) {
  const auto lib = random_library(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(2);
  const ChannelVector q = random_state(rng).values;
  const ChannelVector w = default_channel_weights();
  for (auto _ : state) benchmark::DoNotOptimize(query(lib, q, w, std::nullopt, 5));
}
BENCHMARK(BM_Query)->Arg(100)->Arg(1000);

void BM_MapFrame(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto c = random_state(rng);
  const auto& model = default_deformation_model();
  for (auto _ : state) benchmark::DoNotOptimize(map_frame(c, model));
}
BENCHMARK(BM_MapFrame);

void BM_InvertFrame(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto& model = default_deformation_model();
  const auto base = neutral_baseline(model);
  const auto pts = map_frame(random_state(rng), model).points;
  for (auto _ : state) benchmark::DoNotOptimize(invert_frame(pts, base, model));
}
BENCHMARK(BM_InvertFrame);

void BM_Dtw(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(dtw(a, b));
}
BENCHMARK(BM_Dtw)->Arg(50)->Arg(250);

void BM_GuidanceSchedule(benchmark::State& state) {
  const GuidanceParams p;
  for (auto _ : state) benchmark::DoNotOptimize(guidance_schedule({64, 64}, {{32.0, 28.0}, 10.0}, p));
}
BENCHMARK(BM_GuidanceSchedule);

void BM_Compile(benchmark::State& state) {
  const auto lib = demo_library();
  for (auto _ : state) benchmark::DoNotOptimize(compile({"drowsiness", 50, std::nullopt, {}}, lib));
}
BENCHMARK(BM_Compile);

}  // namespace
BENCHMARK_MAIN();
