// SPDX-License-Identifier: Apache-2.0
// plantdet CLI: train | eval | detect | ablate | synth.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "plantdet/ablate.hpp"
#include "plantdet/train.hpp"

namespace fs = std::filesystem;
using namespace plantdet;

namespace {

struct CommonFlags {
  std::string config;
  std::string data;
  std::string weights;
  std::string out = "runs";
  std::string profile;
  std::string strategy;
  std::optional<int> epochs;
  std::optional<int> batch;
  std::optional<int> img_size;
  std::optional<double> lr;
  std::optional<uint64_t> seed;
  std::optional<double> conf;
  std::optional<double> iou;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool wants_weights) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--data", f.data, "dataset directory");
  if (wants_weights) cmd->add_option("--weights", f.weights, "checkpoint to load");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch", f.batch, "batch size");
  cmd->add_option("--img-size", f.img_size, "square input resolution");
  cmd->add_option("--lr", f.lr, "initial learning rate");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--conf", f.conf, "confidence threshold");
  cmd->add_option("--iou", f.iou, "NMS IoU threshold");
  cmd->add_option("--profile", f.profile, "named preset (smoke, micro)");
  cmd->add_option("--strategy", f.strategy, "backbone stage mix as c3:st, e.g. 2:2");
  cmd->add_option("--out", f.out, "output root directory");
}

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = RunConfig::load(f.config);
  if (!f.profile.empty()) apply_profile(cfg, f.profile);
  if (!f.data.empty()) cfg.data.dir = f.data;
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.batch) cfg.train.batch = *f.batch;
  if (f.img_size) {
    cfg.data.img_size = *f.img_size;
    cfg.synth.image_size = *f.img_size;
  }
  if (f.lr) cfg.train.lr = *f.lr;
  if (f.seed) {
    cfg.train.seed = *f.seed;
    cfg.synth.seed = *f.seed;
  }
  if (f.conf) cfg.eval.conf_threshold = *f.conf;
  if (f.iou) cfg.eval.nms_iou = *f.iou;
  if (!f.strategy.empty()) {
    int c3 = -1, st = -1;
    if (std::sscanf(f.strategy.c_str(), "%d:%d", &c3, &st) != 2) {
      throw ConfigError("--strategy must look like c3:st, e.g. 2:2");
    }
    cfg.model.backbone.c3_stages = c3;
    cfg.model.backbone.st_stages = st;
  }
  return cfg;
}

fs::path make_run_dir(const std::string& out_root, uint64_t seed) {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&t));
  fs::path dir = fs::path(out_root) /
                 ("run_" + std::string(stamp) + "_seed" + std::to_string(seed));
  fs::create_directories(dir);
  return dir;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const FormatError*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plantdet: one-stage plant leaf detector"};
  app.require_subcommand(1);

  CommonFlags train_f, eval_f, detect_f, ablate_f, synth_f;
  std::vector<std::string> detect_images;
  std::string eval_split = "test";
  std::string ablate_grid = "combination";
  int synth_n = 100;
  bool detect_draw = false;

  auto* train_cmd = app.add_subcommand("train", "train a detector");
  add_common(train_cmd, train_f, true);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, eval_f, true);
  eval_cmd->add_option("--split", eval_split, "train|val|test");

  auto* detect_cmd = app.add_subcommand("detect", "run detection on images");
  add_common(detect_cmd, detect_f, true);
  detect_cmd->add_option("images", detect_images, "PPM images")->required();
  detect_cmd->add_flag("--draw", detect_draw, "write PPM copies with drawn boxes");

  auto* ablate_cmd = app.add_subcommand("ablate", "run an ablation grid");
  add_common(ablate_cmd, ablate_f, false);
  ablate_cmd->add_option("--grid", ablate_grid, "attention|combination");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth_cmd, synth_f, false);
  synth_cmd->add_option("--count", synth_n, "number of images");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      RunConfig cfg = resolve_config(train_f);
      cfg.validate(true);
      const fs::path run_dir = make_run_dir(train_f.out, cfg.train.seed);
      auto result = cmd_train(cfg, run_dir);
      std::printf("run dir: %s\n", run_dir.string().c_str());
      std::printf("steps: %d  params: %lld  best mAP@0.5: %.4f\n", result.steps,
                  static_cast<long long>(result.param_count), result.best_map);
      std::printf("%s", format_eval_report(result.final_eval).c_str());
    } else if (eval_cmd->parsed()) {
      if (eval_f.weights.empty()) throw ConfigError("eval requires --weights");
      RunConfig cfg = resolve_config(eval_f);
      const fs::path run_dir = make_run_dir(eval_f.out, cfg.train.seed);
      auto result = cmd_eval(cfg, eval_f.weights, split_from_name(eval_split), run_dir);
      std::printf("%s", format_eval_report(result).c_str());
      std::printf("report: %s\n", (run_dir / "report.json").string().c_str());
    } else if (detect_cmd->parsed()) {
      if (detect_f.weights.empty()) throw ConfigError("detect requires --weights");
      RunConfig cfg = resolve_config(detect_f);
      const double conf = detect_f.conf.value_or(0.25);
      const double iou = detect_f.iou.value_or(0.45);
      const fs::path run_dir = make_run_dir(detect_f.out, cfg.train.seed);
      std::vector<fs::path> paths(detect_images.begin(), detect_images.end());
      int failures = cmd_detect(cfg, detect_f.weights, paths, run_dir, conf, iou,
                                detect_draw);
      std::printf("detections written to %s (%d failures)\n",
                  run_dir.string().c_str(), failures);
      if (failures == static_cast<int>(paths.size())) return 3;
    } else if (ablate_cmd->parsed()) {
      RunConfig cfg = resolve_config(ablate_f);
      if (cfg.profile.empty()) apply_profile(cfg, "smoke");
      AblationGrid grid;
      if (ablate_grid == "attention") {
        grid = AblationGrid::kAttention;
      } else if (ablate_grid == "combination") {
        grid = AblationGrid::kCombination;
      } else {
        throw ConfigError("--grid must be attention or combination");
      }
      const fs::path run_dir = make_run_dir(ablate_f.out, cfg.train.seed);
      auto rows = cmd_ablate(cfg, grid, run_dir);
      std::printf("%s", format_ablation_table(rows, grid).c_str());
      std::printf("table: %s\n", (run_dir / "table.txt").string().c_str());
    } else if (synth_cmd->parsed()) {
      RunConfig cfg = resolve_config(synth_f);
      const fs::path out_dir = synth_f.out.empty() ? fs::path("synth") : fs::path(synth_f.out);
      auto index = cmd_synth(cfg, synth_n, out_dir);
      std::printf("wrote %zu images under %s\n", index.items.size(),
                  out_dir.string().c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
