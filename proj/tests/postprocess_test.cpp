// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plantdet/metrics.hpp"
#include "plantdet/postprocess.hpp"

using namespace plantdet;

namespace {

// O(n^2) reference NMS: literal restatement of the rule.
std::vector<Detection> brute_force_nms(const std::vector<Detection>& dets,
                                       double thr) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });
  std::vector<Detection> kept;
  for (size_t oi : order) {
    bool drop = false;
    for (const auto& k : kept) {
      if (k.class_id == dets[oi].class_id && iou_xyxy(k.box, dets[oi].box) > thr) {
        drop = true;
        break;
      }
    }
    if (!drop) kept.push_back(dets[oi]);
  }
  return kept;
}

std::vector<Detection> random_dets(Rng& rng, int n, int classes, double span = 64) {
  std::vector<Detection> dets;
  for (int i = 0; i < n; ++i) {
    Detection d;
    d.class_id = static_cast<int>(rng.below(classes));
    d.score = rng.uniform(0.01, 1.0);
    double x1 = rng.uniform(0, span), y1 = rng.uniform(0, span);
    d.box = {x1, y1, x1 + rng.uniform(1.0, span / 2), y1 + rng.uniform(1.0, span / 2)};
    dets.push_back(d);
  }
  return dets;
}

// Independent AP evaluator: re-matches the detection subset from scratch at
// every distinct score threshold, then integrates the resulting PR points.
double threshold_sweep_ap(const std::vector<ImageDetection>& dets,
                          const std::vector<ImageGt>& gts, double iou_thr) {
  if (gts.empty()) return 0.0;
  std::vector<double> thresholds;
  for (const auto& d : dets) thresholds.push_back(d.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<double> recall{0.0}, precision{0.0};
  for (double thr : thresholds) {
    std::vector<ImageDetection> subset;
    for (const auto& d : dets) {
      if (d.score >= thr) subset.push_back(d);
    }
    std::stable_sort(subset.begin(), subset.end(),
                     [](const ImageDetection& a, const ImageDetection& b) {
                       return a.score > b.score;
                     });
    std::vector<bool> taken(gts.size(), false);
    int64_t tp = 0;
    for (const auto& d : subset) {
      double best = 0;
      int64_t bj = -1;
      for (size_t j = 0; j < gts.size(); ++j) {
        if (taken[j] || gts[j].image != d.image) continue;
        double v = iou_xyxy(d.box, gts[j].box);
        if (v > best) {
          best = v;
          bj = static_cast<int64_t>(j);
        }
      }
      if (bj >= 0 && best >= iou_thr) {
        taken[static_cast<size_t>(bj)] = true;
        ++tp;
      }
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(subset.size()));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
  recall.push_back(1.0);
  precision.push_back(0.0);
  for (size_t i = precision.size() - 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0;
  for (size_t i = 0; i + 1 < recall.size(); ++i) {
    ap += (recall[i + 1] - recall[i]) * precision[i + 1];
  }
  return ap;
}

}  // namespace

TEST_CASE("nms suppression arithmetic from the worked pair") {
  std::vector<Detection> dets{{0, 0.9, {0, 0, 10, 10}}, {0, 0.8, {1, 1, 11, 11}}};
  CHECK(iou_xyxy(dets[0].box, dets[1].box) == doctest::Approx(81.0 / 119.0));
  auto kept = nms(dets, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);

  // Disjoint boxes all survive.
  std::vector<Detection> far{{0, 0.9, {0, 0, 5, 5}}, {0, 0.8, {20, 20, 25, 25}}};
  CHECK(nms(far, 0.5).size() == 2);

  // Different classes never suppress each other.
  std::vector<Detection> mixed{{0, 0.9, {0, 0, 10, 10}}, {1, 0.8, {1, 1, 11, 11}}};
  CHECK(nms(mixed, 0.5).size() == 2);
}

TEST_CASE("nms equals the O(n^2) reference on random 200-box sets") {
  Rng rng(61);
  for (int it = 0; it < 50; ++it) {
    auto dets = random_dets(rng, 200, 4);
    const double thr = rng.uniform(0.2, 0.8);
    auto fast = nms(dets, thr);
    auto slow = brute_force_nms(dets, thr);
    REQUIRE(fast.size() == slow.size());
    for (size_t i = 0; i < fast.size(); ++i) {
      CHECK(fast[i].score == slow[i].score);
      CHECK(fast[i].class_id == slow[i].class_id);
      CHECK(fast[i].box.x1 == slow[i].box.x1);
    }
  }
}

TEST_CASE("nms output properties: subset, sorted, no survivor pair above thr") {
  Rng rng(62);
  auto dets = random_dets(rng, 120, 3);
  auto kept = nms(dets, 0.45);
  CHECK(kept.size() <= dets.size());
  for (size_t i = 1; i < kept.size(); ++i) CHECK(kept[i - 1].score >= kept[i].score);
  for (size_t i = 0; i < kept.size(); ++i) {
    for (size_t j = i + 1; j < kept.size(); ++j) {
      if (kept[i].class_id == kept[j].class_id) {
        CHECK(iou_xyxy(kept[i].box, kept[j].box) <= 0.45);
      }
    }
  }
}

TEST_CASE("average_precision endpoints: perfect match and sub-threshold match") {
  std::vector<ImageGt> gts{{0, {10, 10, 20, 20}}};
  std::vector<ImageDetection> hit{{0, 0.9, {10, 10, 20, 20}}};
  CHECK(average_precision(hit, gts).first == doctest::Approx(1.0));

  std::vector<ImageDetection> poor{{0, 0.9, {16, 16, 26, 26}}};  // IoU ~ 0.13
  CHECK(average_precision(poor, gts).first == doctest::Approx(0.0));

  CHECK(average_precision({}, gts).first == 0.0);
}

TEST_CASE("average_precision equals the threshold-sweep oracle on 50 scenarios") {
  Rng rng(63);
  for (int it = 0; it < 50; ++it) {
    const int n_img = 1 + static_cast<int>(rng.below(4));
    std::vector<ImageGt> gts;
    for (int img = 0; img < n_img; ++img) {
      const int n = 1 + static_cast<int>(rng.below(6));
      for (int k = 0; k < n; ++k) {
        double x1 = rng.uniform(0, 50), y1 = rng.uniform(0, 50);
        gts.push_back({img, {x1, y1, x1 + rng.uniform(4, 30), y1 + rng.uniform(4, 30)}});
      }
    }
    std::vector<ImageDetection> dets;
    const int nd = static_cast<int>(rng.below(40));
    for (int k = 0; k < nd; ++k) {
      const int img = static_cast<int>(rng.below(n_img));
      // Mix genuine matches (jittered GT boxes) and noise.
      if (rng.uniform() < 0.6 && !gts.empty()) {
        const auto& g = gts[rng.below(gts.size())];
        double j = rng.uniform(0, 6);
        dets.push_back({g.image, rng.uniform(0.05, 1.0),
                        {g.box.x1 + j, g.box.y1 + j, g.box.x2 + j, g.box.y2 + j}});
      } else {
        double x1 = rng.uniform(0, 60), y1 = rng.uniform(0, 60);
        dets.push_back({img, rng.uniform(0.05, 1.0),
                        {x1, y1, x1 + rng.uniform(2, 20), y1 + rng.uniform(2, 20)}});
      }
    }
    auto [ap, curve] = average_precision(dets, gts);
    const double want = threshold_sweep_ap(dets, gts, 0.5);
    CHECK(std::abs(ap - want) < 1e-9);
  }
}

TEST_CASE("AP depends only on the score ranking") {
  Rng rng(64);
  std::vector<ImageGt> gts;
  std::vector<ImageDetection> dets;
  for (int k = 0; k < 8; ++k) {
    double x1 = rng.uniform(0, 40), y1 = rng.uniform(0, 40);
    gts.push_back({0, {x1, y1, x1 + 10, y1 + 10}});
    dets.push_back({0, 0.1 + 0.1 * k, {x1 + 1, y1 + 1, x1 + 11, y1 + 11}});
    double nx = rng.uniform(0, 40);
    dets.push_back({0, 0.05 + 0.1 * k, {nx, 50, nx + 5, 55}});
  }
  auto base = average_precision(dets, gts).first;
  for (auto monotone : {+[](double s) { return s * s; },
                        +[](double s) { return 0.2 + s / 2; },
                        +[](double s) { return std::exp(s); }}) {
    auto mapped = dets;
    for (auto& d : mapped) d.score = monotone(d.score);
    CHECK(average_precision(mapped, gts).first == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("a trailing low-score false positive never raises AP") {
  Rng rng(65);
  std::vector<ImageGt> gts{{0, {0, 0, 10, 10}}, {0, {30, 30, 44, 44}}};
  std::vector<ImageDetection> dets{{0, 0.8, {0, 0, 10, 10}},
                                   {0, 0.6, {31, 31, 45, 45}}};
  const double base = average_precision(dets, gts).first;
  for (int it = 0; it < 20; ++it) {
    auto more = dets;
    double x1 = rng.uniform(0, 60);
    more.push_back({0, 0.01, {x1, 60, x1 + 4, 66}});
    CHECK(average_precision(more, gts).first <= base + 1e-12);
  }
}

TEST_CASE("11-point AP stays within [0,1] and tracks the all-point value") {
  Rng rng(66);
  std::vector<ImageGt> gts;
  std::vector<ImageDetection> dets;
  for (int k = 0; k < 10; ++k) {
    double x1 = rng.uniform(0, 50), y1 = rng.uniform(0, 50);
    gts.push_back({0, {x1, y1, x1 + 8, y1 + 8}});
    if (k % 2 == 0) dets.push_back({0, rng.uniform(0.3, 1.0), {x1, y1, x1 + 8, y1 + 8}});
  }
  auto all_point = average_precision(dets, gts, 0.5, false).first;
  auto eleven = average_precision(dets, gts, 0.5, true).first;
  CHECK(eleven >= 0.0);
  CHECK(eleven <= 1.0);
  CHECK(std::abs(eleven - all_point) < 0.2);
}

TEST_CASE("decode_predictions: threshold filtering is monotone") {
  Rng rng(67);
  std::array<Tensor, 3> preds{Tensor::randn({1, 3, 8, 8, 7}, rng, 2.0f),
                              Tensor::randn({1, 3, 4, 4, 7}, rng, 2.0f),
                              Tensor::randn({1, 3, 2, 2, 7}, rng, 2.0f)};
  auto anchors = AnchorSet::yolo_default();
  const std::array<int, 3> strides{8, 16, 32};
  size_t prev = decode_predictions(preds, anchors, strides, 0.9).size();
  for (double thr : {0.5, 0.2, 0.05, 0.001}) {
    size_t n = decode_predictions(preds, anchors, strides, thr).size();
    CHECK(n >= prev);
    prev = n;
  }
}

TEST_CASE("decode_predictions: saturated-low objectness yields nothing") {
  std::array<Tensor, 3> preds{Tensor::zeros({1, 3, 8, 8, 7}),
                              Tensor::zeros({1, 3, 4, 4, 7}),
                              Tensor::zeros({1, 3, 2, 2, 7})};
  for (auto& p : preds) {
    auto d = p.data();
    for (int64_t i = 0; i < p.numel() / 7; ++i) d[i * 7 + 4] = -20.0f;
  }
  auto dets = decode_predictions(preds, AnchorSet::yolo_default(), {8, 16, 32}, 0.001);
  CHECK(dets.empty());
}

TEST_CASE("decode_predictions: one saturated cell gives one constructed box") {
  std::array<Tensor, 3> preds{Tensor::zeros({1, 3, 8, 8, 7}),
                              Tensor::zeros({1, 3, 4, 4, 7}),
                              Tensor::zeros({1, 3, 2, 2, 7})};
  for (auto& p : preds) {
    auto d = p.data();
    for (int64_t i = 0; i < p.numel() / 7; ++i) d[i * 7 + 4] = -30.0f;
  }
  // Anchor 0 of level 0 at cell (3,2) with t = 0: box centered at
  // ((2+0.5)*8, (3+0.5)*8) sized (10, 13).
  auto d = preds[0].data();
  const int64_t at = (((0 * 3 + 0) * 8 + 3) * 8 + 2) * 7;
  d[at + 4] = 30.0f;
  d[at + 5] = 30.0f;
  d[at + 6] = -30.0f;
  auto dets = decode_predictions(preds, AnchorSet::yolo_default(), {8, 16, 32}, 0.5);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_id == 0);
  CHECK(dets[0].score == doctest::Approx(1.0).epsilon(1e-6));
  CHECK((dets[0].box.x1 + dets[0].box.x2) / 2 == doctest::Approx(20.0));
  CHECK((dets[0].box.y1 + dets[0].box.y2) / 2 == doctest::Approx(28.0));
  CHECK(dets[0].box.width() == doctest::Approx(10.0));
  CHECK(dets[0].box.height() == doctest::Approx(13.0));
}

TEST_CASE("cap_detections keeps the top scores") {
  Rng rng(68);
  auto dets = random_dets(rng, 50, 2);
  auto capped = cap_detections(dets, 10);
  REQUIRE(capped.size() == 10);
  auto sorted = dets;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  for (int i = 0; i < 10; ++i) CHECK(capped[i].score == sorted[i].score);
}
