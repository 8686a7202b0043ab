// SPDX-License-Identifier: Apache-2.0
#include "plantdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace plantdet {

namespace {

// TP/FP flags for detections sorted by (score desc, insertion order).
std::vector<bool> match_greedy(const std::vector<ImageDetection>& sorted_dets,
                               const std::vector<ImageGt>& gts,
                               double iou_threshold) {
  std::vector<bool> tp(sorted_dets.size(), false);
  std::vector<bool> taken(gts.size(), false);
  for (size_t i = 0; i < sorted_dets.size(); ++i) {
    const auto& d = sorted_dets[i];
    double best = 0;
    int64_t best_j = -1;
    for (size_t j = 0; j < gts.size(); ++j) {
      if (taken[j] || gts[j].image != d.image) continue;
      double v = iou_xyxy(d.box, gts[j].box);
      if (v > best) {
        best = v;
        best_j = static_cast<int64_t>(j);
      }
    }
    if (best_j >= 0 && best >= iou_threshold) {
      tp[i] = true;
      taken[static_cast<size_t>(best_j)] = true;
    }
  }
  return tp;
}

double envelope_area(std::vector<double> recall, std::vector<double> precision) {
  // Sentinels, right-to-left precision envelope, then the recall-step sum.
  recall.insert(recall.begin(), 0.0);
  recall.push_back(1.0);
  precision.insert(precision.begin(), 0.0);
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

double eleven_point_ap(const std::vector<double>& recall,
                       const std::vector<double>& precision) {
  double acc = 0;
  for (int k = 0; k <= 10; ++k) {
    const double r = k / 10.0;
    double best = 0;
    for (size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= r) best = std::max(best, precision[i]);
    }
    acc += best;
  }
  return acc / 11.0;
}

}  // namespace

std::pair<double, PRCurve> average_precision(std::vector<ImageDetection> dets,
                                             const std::vector<ImageGt>& gts,
                                             double iou_threshold,
                                             bool eleven_point) {
  PRCurve curve;
  if (gts.empty()) return {0.0, curve};

  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });
  std::vector<ImageDetection> sorted;
  sorted.reserve(dets.size());
  for (size_t i : order) sorted.push_back(dets[i]);

  auto tp = match_greedy(sorted, gts, iou_threshold);
  int64_t cum_tp = 0, cum_fp = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    tp[i] ? ++cum_tp : ++cum_fp;
    curve.precision.push_back(static_cast<double>(cum_tp) /
                              static_cast<double>(cum_tp + cum_fp));
    curve.recall.push_back(static_cast<double>(cum_tp) /
                           static_cast<double>(gts.size()));
    curve.scores.push_back(sorted[i].score);
  }
  const double ap = eleven_point ? eleven_point_ap(curve.recall, curve.precision)
                                 : envelope_area(curve.recall, curve.precision);
  return {ap, curve};
}

namespace {

std::string size_tag_of(double mean_area_640) {
  if (mean_area_640 < 32.0 * 32.0) return "small";
  if (mean_area_640 < 96.0 * 96.0) return "medium";
  return "large";
}

}  // namespace

EvalResult evaluate(DetectorModel& model, const DatasetIndex& index, Split split,
                    const EvalSettings& settings) {
  auto item_ids = index.split_items(split);
  if (item_ids.empty()) {
    throw DataError(std::string("evaluate: split '") + split_name(split) + "' is empty");
  }
  const int nc = index.nc();
  if (nc != model.nc) {
    throw ConfigError("evaluate: dataset has " + std::to_string(nc) +
                      " classes, model expects " + std::to_string(model.nc));
  }

  model.training = false;
  std::vector<std::vector<ImageDetection>> dets_per_class(nc);
  std::vector<std::vector<ImageGt>> gts_per_class(nc);
  std::vector<double> area_sum(nc, 0.0);
  std::vector<int64_t> area_n(nc, 0);

  for (size_t k = 0; k < item_ids.size(); ++k) {
    const auto& item = index.items[item_ids[k]];
    Image img = read_ppm(item.image_path);
    auto [resized, tf] = resize_image(img, settings.img_size, settings.resize);
    auto input = reshape(image_to_tensor(resized),
                         {1, 3, settings.img_size, settings.img_size});
    std::array<Tensor, 3> raw;
    {
      NoGradGuard ng;
      raw = model_forward(model, input);
    }
    auto dets = decode_predictions(raw, model.anchors,
                                   {DetectorModel::kStrides[0], DetectorModel::kStrides[1],
                                    DetectorModel::kStrides[2]},
                                   settings.conf_threshold);
    dets = nms(dets, settings.nms_iou);
    dets = cap_detections(std::move(dets), settings.max_detections);
    for (const auto& d : dets) {
      // Back to original pixel coordinates.
      dets_per_class[d.class_id].push_back(
          ImageDetection{static_cast<int>(k), d.score, tf.invert(d.box)});
    }
    auto annotations = load_annotations(item, nc);
    for (const auto& a : annotations) {
      Box b{a.box.cx - a.box.w / 2, a.box.cy - a.box.h / 2,
            a.box.cx + a.box.w / 2, a.box.cy + a.box.h / 2};
      Box px{b.x1 * img.width, b.y1 * img.height, b.x2 * img.width, b.y2 * img.height};
      gts_per_class[a.class_id].push_back(ImageGt{static_cast<int>(k), px});
      area_sum[a.class_id] += (a.box.w * 640.0) * (a.box.h * 640.0);
      ++area_n[a.class_id];
    }
  }

  EvalResult result;
  result.images = static_cast<int64_t>(item_ids.size());

  // Pooled ranking (class-aware matching) for the best-F1 operating point.
  struct Pooled {
    double score;
    bool tp;
  };
  std::vector<Pooled> pooled;
  int64_t total_gt = 0;

  double map_sum = 0;
  int64_t map_classes = 0;
  for (int c = 0; c < nc; ++c) {
    ClassEval ce;
    ce.class_id = c;
    ce.name = index.class_names[c];
    ce.gt_count = static_cast<int64_t>(gts_per_class[c].size());
    ce.size_tag = area_n[c] > 0 ? size_tag_of(area_sum[c] / area_n[c]) : "-";
    auto [ap, curve] = average_precision(dets_per_class[c], gts_per_class[c], 0.5,
                                         settings.eleven_point);
    ce.ap = ap;
    ce.curve = curve;
    if (ce.gt_count > 0) {
      map_sum += ap;
      ++map_classes;
    }
    total_gt += ce.gt_count;

    // Reuse the per-class ranking for the pooled curve.
    std::vector<size_t> order(dets_per_class[c].size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return dets_per_class[c][a].score > dets_per_class[c][b].score;
    });
    std::vector<ImageDetection> sorted;
    for (size_t i : order) sorted.push_back(dets_per_class[c][i]);
    auto tp = match_greedy(sorted, gts_per_class[c], 0.5);
    for (size_t i = 0; i < sorted.size(); ++i) {
      pooled.push_back(Pooled{sorted[i].score, tp[i]});
    }
    result.classes.push_back(std::move(ce));
  }
  result.map50 = map_classes > 0 ? map_sum / static_cast<double>(map_classes) : 0.0;

  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Pooled& a, const Pooled& b) { return a.score > b.score; });
  double best_f1 = -1;
  double best_thr = 1.0, best_p = 0, best_r = 0;
  int64_t cum_tp = 0, cum_fp = 0;
  for (size_t i = 0; i < pooled.size(); ++i) {
    pooled[i].tp ? ++cum_tp : ++cum_fp;
    // Evaluate only at distinct-score boundaries.
    if (i + 1 < pooled.size() && pooled[i + 1].score == pooled[i].score) continue;
    const double p = static_cast<double>(cum_tp) / static_cast<double>(cum_tp + cum_fp);
    const double r = total_gt > 0 ? static_cast<double>(cum_tp) / static_cast<double>(total_gt) : 0.0;
    const double f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_thr = pooled[i].score;
      best_p = p;
      best_r = r;
    }
  }
  result.precision = best_p;
  result.recall = best_r;
  result.f1_threshold = pooled.empty() ? 1.0 : best_thr;

  // Per-class P/R at the pooled operating point.
  for (int c = 0; c < nc; ++c) {
    auto& ce = result.classes[c];
    const auto& curve = ce.curve;
    double p = 0, r = 0;
    for (size_t i = 0; i < curve.scores.size(); ++i) {
      if (curve.scores[i] >= result.f1_threshold) {
        p = curve.precision[i];
        r = curve.recall[i];
      } else {
        break;
      }
    }
    ce.precision = p;
    ce.recall = r;
  }
  return result;
}

std::string format_eval_report(const EvalResult& result) {
  std::ostringstream os;
  char line[256];
  os << "class                 size    gt        P        R   AP@0.5\n";
  for (const auto& ce : result.classes) {
    std::snprintf(line, sizeof(line), "%-20s %6s %5lld %8.4f %8.4f %8.4f\n",
                  ce.name.c_str(), ce.size_tag.c_str(),
                  static_cast<long long>(ce.gt_count), ce.precision, ce.recall, ce.ap);
    os << line;
  }
  std::snprintf(line, sizeof(line),
                "all images=%lld P=%.4f R=%.4f mAP@0.5=%.4f (conf %.4f)\n",
                static_cast<long long>(result.images), result.precision, result.recall,
                result.map50, result.f1_threshold);
  os << line;
  return os.str();
}

void write_eval_json(const EvalResult& result, const std::filesystem::path& path) {
  nlohmann::json j;
  j["images"] = result.images;
  j["map50"] = result.map50;
  j["precision"] = result.precision;
  j["recall"] = result.recall;
  j["f1_threshold"] = result.f1_threshold;
  auto& classes = j["classes"] = nlohmann::json::array();
  for (const auto& ce : result.classes) {
    classes.push_back({{"id", ce.class_id},
                       {"name", ce.name},
                       {"ap50", ce.ap},
                       {"precision", ce.precision},
                       {"recall", ce.recall},
                       {"gt_count", ce.gt_count},
                       {"size", ce.size_tag}});
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write report " + path.string());
  f << j.dump(2) << "\n";
}

}  // namespace plantdet
