// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "plantdet/ops.hpp"

using namespace plantdet;

namespace {

void bm_matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(1);
  auto a = Tensor::randn({n, n}, rng);
  auto b = Tensor::randn({n, n}, rng);
  for (auto _ : state) {
    auto c = matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(128)->Arg(256);

void bm_conv2d(benchmark::State& state) {
  const int64_t c = state.range(0);
  Rng rng(2);
  auto x = Tensor::randn({1, c, 40, 40}, rng);
  auto w = Tensor::randn({c * 2, c, 3, 3}, rng);
  for (auto _ : state) {
    auto y = conv2d(x, w, 2, 1);
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * (c * 2) * c * 9 * 20 * 20);
}
BENCHMARK(bm_conv2d)->Arg(16)->Arg(32)->Arg(64);

void bm_conv2d_backward(benchmark::State& state) {
  const int64_t c = state.range(0);
  Rng rng(3);
  for (auto _ : state) {
    auto x = Tensor::randn({1, c, 40, 40}, rng, 1.0f, true);
    auto w = Tensor::randn({c * 2, c, 3, 3}, rng, 1.0f, true);
    Tape tape;
    TapeScope scope(tape);
    auto loss = sum(conv2d(x, w, 2, 1));
    backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(bm_conv2d_backward)->Arg(16)->Arg(32);

void bm_maxpool_sppf(benchmark::State& state) {
  Rng rng(4);
  auto x = Tensor::randn({1, 128, 20, 20}, rng);
  for (auto _ : state) {
    auto y = maxpool2d(x, 5, 1, 2);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(bm_maxpool_sppf);

}  // namespace
