// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "plantdet/postprocess.hpp"

using namespace plantdet;

namespace {

std::vector<Detection> dense_dets(int n, int classes) {
  Rng rng(7);
  std::vector<Detection> dets;
  for (int i = 0; i < n; ++i) {
    Detection d;
    d.class_id = static_cast<int>(rng.below(classes));
    d.score = rng.uniform(0.01, 1.0);
    double x1 = rng.uniform(0, 600), y1 = rng.uniform(0, 600);
    d.box = {x1, y1, x1 + rng.uniform(4, 80), y1 + rng.uniform(4, 80)};
    dets.push_back(d);
  }
  return dets;
}

void bm_nms(benchmark::State& state) {
  auto dets = dense_dets(static_cast<int>(state.range(0)), 21);
  for (auto _ : state) {
    auto kept = nms(dets, 0.6);
    benchmark::DoNotOptimize(kept.data());
  }
}
BENCHMARK(bm_nms)->Arg(200)->Arg(1000)->Arg(4000);

void bm_decode(benchmark::State& state) {
  Rng rng(8);
  std::array<Tensor, 3> preds{Tensor::randn({1, 3, 80, 80, 26}, rng, 2.0f),
                              Tensor::randn({1, 3, 40, 40, 26}, rng, 2.0f),
                              Tensor::randn({1, 3, 20, 20, 26}, rng, 2.0f)};
  auto anchors = AnchorSet::yolo_default();
  for (auto _ : state) {
    auto dets = decode_predictions(preds, anchors, {8, 16, 32}, 0.3);
    benchmark::DoNotOptimize(dets.data());
  }
}
BENCHMARK(bm_decode);

}  // namespace

BENCHMARK_MAIN();
