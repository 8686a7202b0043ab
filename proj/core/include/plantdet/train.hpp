// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "plantdet/checkpoint.hpp"
#include "plantdet/config.hpp"

namespace plantdet {

struct TrainResult {
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path metrics_csv;
  double best_map = 0;
  std::vector<double> epoch_loss;  // mean total loss per epoch
  uint64_t first_batch_hash = 0;
  int steps = 0;
  int64_t param_count = 0;
  EvalResult final_eval;
};

/// Linear warmup from lr/10 over warmup_epochs, then cosine decay down to
/// lr * final_lr_frac at the last epoch. epoch_frac is fractional progress.
double lr_at(const TrainSettings& settings, double epoch_frac);

/// Seeded end-to-end loop: shuffle -> batch -> forward -> loss -> backward
/// -> SGD step, with periodic val evaluation, best/last checkpoints and a
/// CSV metrics log under run_dir. When cfg.data.dir is empty a synthetic
/// dataset is generated into run_dir/data first.
TrainResult cmd_train(RunConfig cfg, const std::filesystem::path& run_dir);

/// Loads a checkpoint and evaluates one split; writes report.txt and
/// report.json into report_dir (unless it is empty).
EvalResult cmd_eval(RunConfig cfg, const std::filesystem::path& weights, Split split,
                    const std::filesystem::path& report_dir);

/// Per image: detections in original-pixel coordinates written as
/// `<stem>.txt` (class name, score, corners); optionally a PPM copy with
/// drawn boxes. Unreadable files are reported and skipped; returns the
/// number of failures.
int cmd_detect(RunConfig cfg, const std::filesystem::path& weights,
               const std::vector<std::filesystem::path>& images,
               const std::filesystem::path& out_dir, double conf, double iou,
               bool draw);

/// Generates a synthetic dataset and writes its manifest.
DatasetIndex cmd_synth(const RunConfig& cfg, int n, const std::filesystem::path& out_dir);

}  // namespace plantdet
