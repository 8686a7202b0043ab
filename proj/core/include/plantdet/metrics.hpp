// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "plantdet/dataset.hpp"
#include "plantdet/image.hpp"
#include "plantdet/model.hpp"
#include "plantdet/postprocess.hpp"

namespace plantdet {

/// Cumulative precision/recall in descending score order.
struct PRCurve {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> scores;
};

struct ImageDetection {
  int image = 0;
  double score = 0;
  Box box;
};

struct ImageGt {
  int image = 0;
  Box box;
};

/// Greedy matching in score order against the unmatched ground truth with
/// the highest IoU (>= iou_threshold); AP integrates the precision envelope
/// over recall (all-point interpolation; eleven_point switches to the
/// 11-point average).
std::pair<double, PRCurve> average_precision(std::vector<ImageDetection> dets,
                                             const std::vector<ImageGt>& gts,
                                             double iou_threshold = 0.5,
                                             bool eleven_point = false);

struct ClassEval {
  int class_id = 0;
  std::string name;
  double ap = 0;
  double precision = 0;
  double recall = 0;
  int64_t gt_count = 0;
  std::string size_tag;  // small / medium / large, from mean GT area at 640
  PRCurve curve;
};

struct EvalResult {
  std::vector<ClassEval> classes;
  double map50 = 0;
  double precision = 0;     // at the best-F1 pooled threshold
  double recall = 0;
  double f1_threshold = 0;  // the operating point
  int64_t images = 0;
};

struct EvalSettings {
  double conf_threshold = 0.001;
  double nms_iou = 0.6;
  int max_detections = 300;
  bool eleven_point = false;
  int img_size = 640;
  ResizeMode resize = ResizeMode::kStretch;
};

/// Runs eval-mode forwards over a dataset split, decodes + NMS per image,
/// and aggregates per-class AP@0.5 with P/R at the pooled best-F1 threshold.
EvalResult evaluate(DetectorModel& model, const DatasetIndex& index, Split split,
                    const EvalSettings& settings);

std::string format_eval_report(const EvalResult& result);
void write_eval_json(const EvalResult& result, const std::filesystem::path& path);

}  // namespace plantdet
