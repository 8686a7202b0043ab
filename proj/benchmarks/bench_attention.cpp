// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "plantdet/blocks.hpp"

using namespace plantdet;

namespace {

StBlockT<float> bench_block(int c) {
  ParamStore store;
  Rng rng(1);
  return make_st_block(store, rng, "b", c, 5, 32, 4, false, false);
}

// Windowed vs global attention on the stride-16 map of a 640 input.
void bm_wmsa_40x40(benchmark::State& state) {
  auto st = bench_block(128);
  Rng rng(2);
  auto x = Tensor::randn({1, 40, 40, 128}, rng);
  WindowSpec spec{5, 0, 40, 40};
  for (auto _ : state) {
    auto y = wmsa_forward(x, st.first.attn, spec);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(bm_wmsa_40x40);

void bm_swmsa_40x40(benchmark::State& state) {
  auto st = bench_block(128);
  Rng rng(3);
  auto x = Tensor::randn({1, 40, 40, 128}, rng);
  WindowSpec spec{5, 2, 40, 40};
  for (auto _ : state) {
    auto y = wmsa_forward(x, st.first.attn, spec);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(bm_swmsa_40x40);

void bm_global_msa_40x40(benchmark::State& state) {
  auto st = bench_block(128);
  Rng rng(4);
  auto x = Tensor::randn({1, 40, 40, 128}, rng);
  for (auto _ : state) {
    auto y = global_msa_forward(x, st.first.attn);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(bm_global_msa_40x40);

void bm_st_block_20x20(benchmark::State& state) {
  auto st = bench_block(256);
  Rng rng(5);
  auto x = Tensor::randn({1, 256, 20, 20}, rng);
  for (auto _ : state) {
    auto y = st_block_forward(x, st);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(bm_st_block_20x20);

}  // namespace
