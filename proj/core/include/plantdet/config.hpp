// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "plantdet/loss.hpp"
#include "plantdet/metrics.hpp"
#include "plantdet/model.hpp"
#include "plantdet/synth.hpp"

namespace plantdet {

struct ModelSettings {
  BackboneConfig backbone;
  int nc = 3;
  std::vector<std::string> class_names;  // adopted from the dataset when empty
  AnchorSet anchors = AnchorSet::yolo_default();
};

struct TrainSettings {
  int epochs = 300;
  int batch = 32;
  double lr = 0.01;
  double momentum = 0.937;
  double weight_decay = 5e-4;
  int warmup_epochs = 3;
  double final_lr_frac = 0.05;
  uint64_t seed = 0;
  int eval_period = 1;  // epochs between val evaluations
  int max_steps = 0;    // stop after this many optimizer steps (0 = no cap)
};

struct DataSettings {
  std::string dir;
  int img_size = 640;
  ResizeMode resize = ResizeMode::kStretch;
  bool single_split = false;  // keep every image in train (overfit runs)
};

/// The whole run configuration; a single JSON file on disk, overridable
/// from the command line.
struct RunConfig {
  ModelSettings model;
  TrainSettings train;
  EvalSettings eval;
  DataSettings data;
  LossWeights loss = LossWeights::defaults(3);
  ObjTargetKind obj_target = ObjTargetKind::kIou;
  SyntheticSceneConfig synth;
  int synth_count = 8;  // images generated when no dataset dir is given
  std::string profile;

  void validate(bool require_data_dir) const;

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(const std::string& json_text);
  void save(const std::filesystem::path& path) const;
  std::string dump() const;
};

/// Named presets. "smoke" is the desk-scale overfit run: width-16 model,
/// 8 synthetic 128px images, batch 4, at most 300 steps.
void apply_profile(RunConfig& cfg, const std::string& name);

}  // namespace plantdet
