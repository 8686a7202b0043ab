// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "attention_oracle.hpp"
#include "gradcheck.hpp"
#include "plantdet/blocks.hpp"

using namespace plantdet;
using attention_oracle::oracle_attention;
using attention_oracle::same_region;
using attention_oracle::same_window;
using attention_oracle::to_oracle;

namespace {

template <typename T>
MsaT<T> make_plain_msa(Rng& rng, int c, int head_dim) {
  ParamStoreT<T> store;
  StBlockT<T> st = make_st_block(store, rng, "t", c, 5, head_dim, 4, false, false);
  return st.first.attn;
}

}  // namespace

TEST_CASE("window_partition enumerates 2x2 tiles of a 4x4 map") {
  std::vector<float> vals(16);
  for (int i = 0; i < 16; ++i) vals[i] = static_cast<float>(i);
  auto x = Tensor::from_data({1, 4, 4, 1}, vals);
  WindowSpec spec{2, 0, 4, 4};
  auto w = window_partition(x, spec);
  CHECK(w.shape() == Shape{4, 4, 1});
  // Window 0 is the top-left tile in row-major order.
  const float w0[] = {0, 1, 4, 5};
  const float w1[] = {2, 3, 6, 7};
  const float w2[] = {8, 9, 12, 13};
  const float w3[] = {10, 11, 14, 15};
  for (int i = 0; i < 4; ++i) {
    CHECK(w.data()[0 * 4 + i] == w0[i]);
    CHECK(w.data()[1 * 4 + i] == w1[i]);
    CHECK(w.data()[2 * 4 + i] == w2[i]);
    CHECK(w.data()[3 * 4 + i] == w3[i]);
  }
}

TEST_CASE("window partition/reverse roundtrip is exact over random shapes") {
  Rng rng(7);
  for (int it = 0; it < 100; ++it) {
    const int win = 1 + static_cast<int>(rng.below(5));
    const int b = 1 + static_cast<int>(rng.below(3));
    const int ny = 1 + static_cast<int>(rng.below(4));
    const int nx = 1 + static_cast<int>(rng.below(4));
    const int c = 1 + static_cast<int>(rng.below(6));
    WindowSpec spec{win, 0, ny * win, nx * win};
    auto x = Tensor::randn({b, ny * win, nx * win, c}, rng);
    auto back = window_reverse(window_partition(x, spec), spec, b);
    REQUIRE(back.shape() == x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(back.data()[i] == x.data()[i]);
  }
}

TEST_CASE("single full-map window degenerates to the flattened input") {
  Rng rng(9);
  auto x = Tensor::randn({2, 3, 3, 5}, rng);
  WindowSpec spec{3, 0, 3, 3};
  auto w = window_partition(x, spec);
  CHECK(w.shape() == Shape{2, 9, 5});
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(w.data()[i] == x.data()[i]);
}

TEST_CASE("window_partition demands padded input; reverse checks counts") {
  auto x = Tensor::zeros({1, 5, 4, 2});
  WindowSpec spec{2, 0, 4, 4};
  CHECK_THROWS_AS(window_partition(x, spec), DimensionError);
  auto w = Tensor::zeros({3, 4, 2});
  CHECK_THROWS_AS(window_reverse(w, spec, 1), DimensionError);
}

TEST_CASE("attention_mask: contract, single window, value set") {
  WindowSpec no_shift{4, 0, 8, 8};
  CHECK_THROWS_AS(attention_mask<float>(no_shift), ContractError);

  WindowSpec single{4, 2, 4, 4};
  auto m = attention_mask<float>(single);
  CHECK(m.shape() == Shape{1, 16, 16});
  for (auto v : m.data()) CHECK(v == 0.0f);

  WindowSpec spec{2, 1, 4, 4};
  auto m2 = attention_mask<float>(spec);
  for (auto v : m2.data()) CHECK((v == 0.0f || v == -1e4f));
}

TEST_CASE("attention_mask matches brute-force region comparison (2W map)") {
  const int win = 2, shift = 1, h = 4, w = 4;
  WindowSpec spec{win, shift, h, w};
  auto m = attention_mask<float>(spec);
  const int ny = 2, nx = 2, s = 4;
  for (int wy = 0; wy < ny; ++wy)
    for (int wx = 0; wx < nx; ++wx)
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
          const int iy = wy * win + i / win, ix = wx * win + i % win;
          const int jy = wy * win + j / win, jx = wx * win + j % win;
          const bool same = same_region(iy, ix, jy, jx, h, w, win, shift);
          const float got = m.data()[((wy * nx + wx) * s + i) * s + j];
          CHECK(got == (same ? 0.0f : -1e4f));
        }
}

TEST_CASE("attention_mask matches brute force on a 5-window irregular map") {
  const int win = 3, shift = 1;
  WindowSpec spec{win, shift, 7, 10};  // pads to 9 x 12
  auto m = attention_mask<float>(spec);
  const int hp = spec.padded_h(), wp = spec.padded_w();
  const int nx = spec.windows_x(), s = spec.tokens();
  for (int g = 0; g < spec.num_windows(); ++g) {
    const int wy = g / nx, wx = g % nx;
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        const int iy = wy * win + i / win, ix = wx * win + i % win;
        const int jy = wy * win + j / win, jx = wx * win + j % win;
        const bool same = same_region(iy, ix, jy, jx, hp, wp, win, shift);
        CHECK(m.data()[(g * s + i) * s + j] == (same ? 0.0f : -1e4f));
      }
  }
}

TEST_CASE("masked softmax rows: unit mass, masked pairs below 1e-4") {
  Rng rng(37);
  WindowSpec spec{3, 1, 6, 9};
  auto mask = attention_mask<float>(spec);
  const int64_t s = spec.tokens();
  auto logits = Tensor::randn({spec.num_windows(), s, s}, rng, 3.0f);
  auto weights = softmax_lastdim(add(logits, mask));
  for (int64_t g = 0; g < spec.num_windows(); ++g) {
    for (int64_t i = 0; i < s; ++i) {
      double row_sum = 0;
      for (int64_t j = 0; j < s; ++j) {
        const float w = weights.data()[(g * s + i) * s + j];
        row_sum += w;
        if (mask.data()[(g * s + i) * s + j] != 0.0f) CHECK(w < 1e-4f);
      }
      CHECK(std::abs(row_sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("wmsa with zero Q/K and identity V/proj averages each window") {
  const int c = 4;
  MsaT<float> attn;
  attn.heads = 1;
  attn.qkv_w = Tensor::zeros({c, 3 * c});
  attn.qkv_b = Tensor::zeros({3 * c});
  attn.proj_w = Tensor::zeros({c, c});
  attn.proj_b = Tensor::zeros({c});
  for (int i = 0; i < c; ++i) {
    attn.qkv_w.at({i, 2 * c + i}) = 1.0f;  // V = x
    attn.proj_w.at({i, i}) = 1.0f;
  }
  Rng rng(33);
  auto x = Tensor::randn({1, 2, 2, c}, rng);
  WindowSpec spec{2, 0, 2, 2};
  auto y = wmsa_forward(x, attn, spec);
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0;
    for (int p = 0; p < 4; ++p) mean += x.data()[p * c + ch];
    mean /= 4;
    for (int p = 0; p < 4; ++p) {
      CHECK(y.data()[p * c + ch] == doctest::Approx(mean).epsilon(1e-5));
    }
  }
}

TEST_CASE("unshifted W-MSA equals per-window brute-force attention") {
  Rng rng(41);
  const int c = 8, head_dim = 4, win = 4, h = 8, w = 8;
  auto attn = make_plain_msa<float>(rng, c, head_dim);
  auto x = Tensor::randn({1, h, w, c}, rng);
  WindowSpec spec{win, 0, h, w};
  auto y = wmsa_forward(x, attn, spec);

  auto oracle = to_oracle(attn, c);
  // Assemble all padded positions as tokens; allow only same-window pairs.
  std::vector<std::vector<double>> tokens(h * w, std::vector<double>(c));
  for (int p = 0; p < h * w; ++p)
    for (int ch = 0; ch < c; ++ch) tokens[p][ch] = x.data()[p * c + ch];
  auto want = oracle_attention(tokens, oracle, [&](int i, int j) {
    return same_window(i / w, i % w, j / w, j % w, win);
  });
  for (int p = 0; p < h * w; ++p)
    for (int ch = 0; ch < c; ++ch) {
      CHECK(y.data()[p * c + ch] == doctest::Approx(want[p][ch]).epsilon(1e-6));
    }
}

TEST_CASE("SW-MSA equals brute-force masked attention over the shifted map") {
  Rng rng(43);
  const int c = 8, head_dim = 4, h = 8, w = 8;
  for (int win : {2, 4}) {
    const int shift = win / 2;
    auto attn = make_plain_msa<float>(rng, c, head_dim);
    auto x = Tensor::randn({1, h, w, c}, rng);
    WindowSpec spec{win, shift, h, w};
    auto y = wmsa_forward(x, attn, spec);

    // Build the shifted map (no padding needed: dims divide the window).
    auto oracle = to_oracle(attn, c);
    std::vector<std::vector<double>> tokens(h * w, std::vector<double>(c));
    for (int y0 = 0; y0 < h; ++y0)
      for (int x0 = 0; x0 < w; ++x0) {
        const int sy = (y0 + shift) % h, sx = (x0 + shift) % w;
        for (int ch = 0; ch < c; ++ch)
          tokens[y0 * w + x0][ch] = x.data()[(sy * w + sx) * c + ch];
      }
    auto shifted_out = oracle_attention(tokens, oracle, [&](int i, int j) {
      const int iy = i / w, ix = i % w, jy = j / w, jx = j % w;
      return same_window(iy, ix, jy, jx, win) &&
             same_region(iy, ix, jy, jx, h, w, win, shift);
    });
    // Unshift and compare.
    for (int y0 = 0; y0 < h; ++y0)
      for (int x0 = 0; x0 < w; ++x0) {
        const int sy = (y0 + shift) % h, sx = (x0 + shift) % w;
        for (int ch = 0; ch < c; ++ch) {
          CHECK(y.data()[(sy * w + sx) * c + ch] ==
                doctest::Approx(shifted_out[y0 * w + x0][ch]).epsilon(1e-6));
        }
      }
  }
}

TEST_CASE("global MSA: single position, window equivalence, permutation") {
  Rng rng(51);
  const int c = 8, head_dim = 4;
  auto attn = make_plain_msa<float>(rng, c, head_dim);

  // One position attends only to itself.
  auto x1 = Tensor::randn({1, 1, 1, c}, rng);
  auto y1 = global_msa_forward(x1, attn);
  auto oracle = to_oracle(attn, c);
  auto want = oracle_attention({{std::vector<double>(x1.data().begin(), x1.data().end())}},
                               oracle, [](int, int) { return true; });
  for (int ch = 0; ch < c; ++ch) {
    CHECK(y1.data()[ch] == doctest::Approx(want[0][ch]).epsilon(1e-6));
  }

  // Full-map window with no shift equals the global path.
  auto x = Tensor::randn({2, 6, 6, c}, rng);
  WindowSpec spec{6, 0, 6, 6};
  auto yw = wmsa_forward(x, attn, spec);
  auto yg = global_msa_forward(x, attn);
  for (int64_t i = 0; i < yw.numel(); ++i) {
    CHECK(std::abs(yw.data()[i] - yg.data()[i]) < 1e-6f);
  }

  // Permuting positions permutes outputs identically.
  auto xs = Tensor::randn({1, 2, 3, c}, rng);
  auto ys = global_msa_forward(xs, attn);
  // Reverse the 6 positions.
  auto xr = Tensor::zeros({1, 2, 3, c});
  for (int p = 0; p < 6; ++p)
    for (int ch = 0; ch < c; ++ch) xr.data()[p * c + ch] = xs.data()[(5 - p) * c + ch];
  auto yr = global_msa_forward(xr, attn);
  for (int p = 0; p < 6; ++p)
    for (int ch = 0; ch < c; ++ch) {
      CHECK(yr.data()[p * c + ch] ==
            doctest::Approx(ys.data()[(5 - p) * c + ch]).epsilon(1e-5));
    }
}

TEST_CASE("st_block with zeroed parameters passes the input through") {
  ParamStore store;
  Rng rng(61);
  auto st = make_st_block(store, rng, "st", 8, 2, 4, 2, false, false);
  for (auto& [name, t] : store.params()) {
    for (auto& v : t.data()) v = 0.0f;
  }
  auto x = Tensor::randn({1, 8, 4, 4}, rng);
  auto y = st_block_forward(x, st);
  REQUIRE(y.shape() == x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-6));
  }
}

TEST_CASE("st_block preserves shape when the window does not divide the map") {
  ParamStore store;
  Rng rng(62);
  auto st = make_st_block(store, rng, "st", 8, 5, 4, 2, false, false);
  for (auto hw : {std::pair{3, 7}, std::pair{5, 5}, std::pair{1, 1}, std::pair{11, 6}}) {
    auto x = Tensor::randn({1, 8, hw.first, hw.second}, rng);
    auto y = st_block_forward(x, st);
    CHECK(y.shape() == x.shape());
  }
}

TEST_CASE("st_block full gradient check (tiny config)") {
  ParamStoreT<double> store;
  Rng rng(63);
  auto st = make_st_block(store, rng, "st", 8, 4, 4, 2, false, false);
  auto x = Tensor64::randn({1, 8, 8, 8}, rng, 1.0, true);
  std::vector<Tensor64> inputs{x};
  for (auto& [name, t] : store.params()) inputs.push_back(t);
  auto rep = gradcheck::check(
      [&] {
        Rng wrng(3);
        auto w = Tensor64::zeros({1, 8, 8, 8});
        for (auto& v : w.data()) v = wrng.uniform(-1.0, 1.0);
        return sum(mul(st_block_forward(x, st), w));
      },
      inputs, 1e-3, 6);
  CHECK(rep.ok(1e-3));
}

TEST_CASE("st_block with relative position bias still passes gradients") {
  ParamStoreT<double> store;
  Rng rng(64);
  auto st = make_st_block(store, rng, "st", 8, 3, 4, 2, false, true);
  CHECK(st.first.attn.rel_bias.defined());
  auto x = Tensor64::randn({1, 8, 6, 6}, rng, 1.0, true);
  std::vector<Tensor64> inputs{x, st.first.attn.rel_bias};
  auto rep = gradcheck::check(
      [&] { return sum(st_block_forward(x, st)); }, inputs, 1e-3, 8);
  CHECK(rep.ok(1e-3));
}

TEST_CASE("SPPF keeps constant inputs constant per channel") {
  ParamStore store;
  Rng rng(71);
  auto sppf = make_sppf(store, rng, "sppf", 8, 8);
  auto x = Tensor::full({1, 8, 6, 6}, 0.37f);
  auto y = sppf_forward(x, sppf, false);
  REQUIRE(y.shape() == Shape{1, 8, 6, 6});
  for (int ch = 0; ch < 8; ++ch) {
    const float v0 = y.data()[ch * 36];
    for (int i = 0; i < 36; ++i) CHECK(y.data()[ch * 36 + i] == doctest::Approx(v0));
  }
}

TEST_CASE("C3 with zeroed bottleneck equals the two plain branches") {
  ParamStore store;
  Rng rng(72);
  auto c3 = make_c3(store, rng, "c3", 8, 8, 1, true);
  for (auto& v : c3.bottlenecks[0].cv1.conv_w.data()) v = 0.0f;
  for (auto& v : c3.bottlenecks[0].cv2.conv_w.data()) v = 0.0f;
  auto x = Tensor::randn({1, 8, 5, 5}, rng);
  auto y = c3_forward(x, c3, false);

  auto a = cbs_forward(x, c3.cv1, false);
  auto b = cbs_forward(x, c3.cv2, false);
  auto want = cbs_forward(concat<float>({a, b}, 1), c3.cv3, false);
  REQUIRE(y.shape() == want.shape());
  for (int64_t i = 0; i < y.numel(); ++i) {
    CHECK(y.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-6));
  }
}

TEST_CASE("serial SPPF pooling equals parallel 5/9/13 pooling") {
  ParamStore store;
  Rng rng(73);
  auto sppf = make_sppf(store, rng, "sppf", 16, 16);
  auto x = Tensor::randn({2, 16, 9, 9}, rng);
  auto serial = sppf_forward(x, sppf, false);

  auto a = cbs_forward(x, sppf.cv1, false);
  auto p5 = maxpool2d(a, 5, 1, 2);
  auto p9 = maxpool2d(a, 9, 1, 4);
  auto p13 = maxpool2d(a, 13, 1, 6);
  auto parallel = cbs_forward(concat<float>({a, p5, p9, p13}, 1), sppf.cv2, false);
  REQUIRE(serial.shape() == parallel.shape());
  for (int64_t i = 0; i < serial.numel(); ++i) {
    CHECK(std::abs(serial.data()[i] - parallel.data()[i]) < 1e-6f);
  }
}

TEST_CASE("CBS / C3 / SPPF composed gradient checks at tiny widths") {
  Rng rng(81);
  {
    ParamStoreT<double> store;
    auto cbs = make_cbs(store, rng, "cbs", 3, 4, 3, 2);
    auto x = Tensor64::randn({2, 3, 6, 6}, rng, 1.0, true);
    std::vector<Tensor64> inputs{x};
    for (auto& [n, t] : store.params()) inputs.push_back(t);
    auto rep = gradcheck::check(
        [&] { return sum(cbs_forward(x, cbs, true)); }, inputs, 1e-3, 10);
    CHECK(rep.ok(1e-3));
  }
  {
    ParamStoreT<double> store;
    auto c3 = make_c3(store, rng, "c3", 4, 4, 1, true);
    auto x = Tensor64::randn({1, 4, 5, 5}, rng, 1.0, true);
    std::vector<Tensor64> inputs{x};
    for (auto& [n, t] : store.params()) inputs.push_back(t);
    auto rep = gradcheck::check(
        [&] { return sum(c3_forward(x, c3, true)); }, inputs, 1e-3, 8);
    CHECK(rep.ok(1e-3));
  }
  {
    ParamStoreT<double> store;
    auto sppf = make_sppf(store, rng, "sppf", 4, 4);
    auto x = Tensor64::randn({1, 4, 6, 6}, rng, 1.0, true);
    std::vector<Tensor64> inputs{x};
    for (auto& [n, t] : store.params()) inputs.push_back(t);
    auto rep = gradcheck::check(
        [&] { return sum(sppf_forward(x, sppf, true)); }, inputs, 1e-3, 8);
    CHECK(rep.ok(1e-3));
  }
}
