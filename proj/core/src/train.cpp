// SPDX-License-Identifier: Apache-2.0
#include "plantdet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "plantdet/sgd.hpp"

namespace plantdet {

double lr_at(const TrainSettings& s, double epoch_frac) {
  if (s.warmup_epochs > 0 && epoch_frac < s.warmup_epochs) {
    const double t = epoch_frac / s.warmup_epochs;
    return s.lr * (0.1 + 0.9 * t);
  }
  const double span = std::max(1.0, static_cast<double>(s.epochs - s.warmup_epochs));
  const double t = std::clamp((epoch_frac - s.warmup_epochs) / span, 0.0, 1.0);
  const double floor_frac = s.final_lr_frac;
  return s.lr * (floor_frac + (1.0 - floor_frac) * 0.5 *
                                  (1.0 + std::cos(3.14159265358979323846 * t)));
}

namespace {

uint64_t fnv1a(const void* data, size_t bytes, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

struct Sample {
  Tensor image;  // [3,S,S]
  std::vector<Annotation> annotations;
};

}  // namespace

TrainResult cmd_train(RunConfig cfg, const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  cfg.validate(/*require_data_dir=*/true);
  fs::create_directories(run_dir);
  if (!fs::is_directory(run_dir)) throw IoError("cannot create run dir " + run_dir.string());

  DatasetIndex index;
  if (cfg.data.dir.empty()) {
    SyntheticSceneConfig synth = cfg.synth;
    synth.seed = synth.seed == 0 ? cfg.train.seed + 1 : synth.seed;
    index = generate_synthetic_dataset(synth, cfg.synth_count, run_dir / "data");
  } else {
    index = index_dataset(cfg.data.dir);
  }
  if (cfg.model.class_names.empty()) {
    cfg.model.class_names = index.class_names;
    cfg.model.nc = index.nc();
    cfg.loss = LossWeights::defaults(cfg.model.nc);
  } else if (index.nc() != cfg.model.nc) {
    throw ConfigError("dataset classes (" + std::to_string(index.nc()) +
                      ") do not match model.nc (" + std::to_string(cfg.model.nc) + ")");
  }
  if (cfg.data.single_split) {
    assign_all(index, Split::kTrain);
  } else {
    split_dataset(index, cfg.train.seed);
  }
  write_manifest(index, run_dir / "manifest.json");
  cfg.save(run_dir / "config.json");

  auto train_ids = index.split_items(Split::kTrain);
  if (train_ids.empty()) throw DataError("train split is empty");
  const Split val_split = cfg.data.single_split ? Split::kTrain : Split::kVal;

  auto model = build_model<float>(cfg.model.backbone, cfg.model.nc, cfg.model.anchors,
                                  cfg.model.class_names, cfg.train.seed);
  TrainResult result;
  result.param_count = count_parameters(model);
  result.metrics_csv = run_dir / "metrics.csv";
  result.best_checkpoint = run_dir / "best.ckpt";
  result.last_checkpoint = run_dir / "last.ckpt";

  // Desk-scale datasets fit in memory; keep decoded samples around.
  const int s = cfg.data.img_size;
  std::vector<Sample> cache(train_ids.size());
  auto sample_at = [&](size_t pos) -> Sample& {
    Sample& sample = cache[pos];
    if (!sample.image.defined()) {
      const auto& item = index.items[train_ids[pos]];
      Image img = read_ppm(item.image_path);
      auto [resized, tf] = resize_image(img, s, cfg.data.resize);
      sample.image = image_to_tensor(resized);
      sample.annotations = load_annotations(item, cfg.model.nc);
      if (cfg.data.resize == ResizeMode::kLetterbox) {
        // Letterbox moves normalized boxes; map through the transform.
        for (auto& a : sample.annotations) {
          Box px{a.box.cx - a.box.w / 2, a.box.cy - a.box.h / 2,
                 a.box.cx + a.box.w / 2, a.box.cy + a.box.h / 2};
          Box orig{px.x1 * img.width, px.y1 * img.height, px.x2 * img.width,
                   px.y2 * img.height};
          Box moved = tf.apply(orig);
          a.box.cx = (moved.x1 + moved.x2) / 2 / s;
          a.box.cy = (moved.y1 + moved.y2) / 2 / s;
          a.box.w = (moved.x2 - moved.x1) / s;
          a.box.h = (moved.y2 - moved.y1) / s;
        }
      }
    }
    return sample;
  };

  const std::array<LevelShape, 3> levels{LevelShape{s / 8, s / 8, 8},
                                         LevelShape{s / 16, s / 16, 16},
                                         LevelShape{s / 32, s / 32, 32}};
  SgdState sgd;
  std::ofstream csv(result.metrics_csv);
  if (!csv) throw IoError("cannot write " + result.metrics_csv.string());
  csv << "epoch,steps,lr,loss,box,obj,cls,precision,recall,map50\n";

  EvalSettings eval_settings = cfg.eval;
  eval_settings.img_size = cfg.data.img_size;
  eval_settings.resize = cfg.data.resize;

  double last_p = 0, last_r = 0, last_map = 0;
  int steps = 0;
  bool stop = false;
  const int total_epochs = cfg.train.epochs;
  for (int epoch = 0; epoch < total_epochs && !stop; ++epoch) {
    std::vector<size_t> order(train_ids.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(seed_stream(cfg.train.seed, 0x7261696e + epoch));
    shuffle_rng.shuffle(order);

    model.training = true;
    double epoch_loss = 0, epoch_box = 0, epoch_obj = 0, epoch_cls = 0;
    int epoch_batches = 0;
    double lr = cfg.train.lr;
    for (size_t at = 0; at < order.size() && !stop; at += cfg.train.batch) {
      const size_t bn = std::min<size_t>(cfg.train.batch, order.size() - at);
      auto input = Tensor::zeros({static_cast<int64_t>(bn), 3, s, s});
      std::vector<std::vector<Annotation>> batch_ann(bn);
      auto in_data = input.data();
      const int64_t plane = 3LL * s * s;
      for (size_t bi = 0; bi < bn; ++bi) {
        Sample& sample = sample_at(order[at + bi]);
        std::copy(sample.image.data().begin(), sample.image.data().end(),
                  in_data.begin() + static_cast<int64_t>(bi) * plane);
        batch_ann[bi] = sample.annotations;
      }
      if (result.first_batch_hash == 0) {
        result.first_batch_hash =
            fnv1a(in_data.data(), in_data.size() * sizeof(float));
      }

      const double epoch_frac =
          epoch + static_cast<double>(at) / static_cast<double>(order.size());
      lr = lr_at(cfg.train, epoch_frac);

      Tape tape;
      {
        TapeScope scope(tape);
        auto preds = model_forward(model, input);
        auto assignment = assign_targets(batch_ann, cfg.model.anchors, levels,
                                         cfg.model.nc);
        auto [loss, comps] = detection_loss(preds, assignment, cfg.loss,
                                            cfg.model.anchors, levels, cfg.model.nc,
                                            cfg.obj_target);
        model.store.zero_grad();
        backward(loss);
        sgd_step(model.store, sgd, lr, cfg.train.momentum, cfg.train.weight_decay);
        epoch_loss += comps.total;
        epoch_box += comps.box;
        epoch_obj += comps.obj;
        epoch_cls += comps.cls;
        ++epoch_batches;
      }
      ++steps;
      if (cfg.train.max_steps > 0 && steps >= cfg.train.max_steps) stop = true;
    }
    result.epoch_loss.push_back(epoch_batches > 0 ? epoch_loss / epoch_batches : 0.0);

    const bool last_epoch = stop || epoch == total_epochs - 1;
    if (epoch % cfg.train.eval_period == 0 || last_epoch) {
      auto eval = evaluate(model, index, val_split, eval_settings);
      last_p = eval.precision;
      last_r = eval.recall;
      last_map = eval.map50;
      if (eval.map50 >= result.best_map) {
        result.best_map = eval.map50;
        save_checkpoint(model, result.best_checkpoint);
      }
      if (last_epoch) result.final_eval = eval;
    }
    const double inv_b = epoch_batches > 0 ? 1.0 / epoch_batches : 0.0;
    char row[256];
    std::snprintf(row, sizeof(row), "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  epoch, steps, lr, result.epoch_loss.back(), epoch_box * inv_b,
                  epoch_obj * inv_b, epoch_cls * inv_b, last_p, last_r, last_map);
    csv << row;
  }
  result.steps = steps;
  save_checkpoint(model, result.last_checkpoint);
  if (!std::filesystem::exists(result.best_checkpoint)) {
    save_checkpoint(model, result.best_checkpoint);
  }
  return result;
}

EvalResult cmd_eval(RunConfig cfg, const std::filesystem::path& weights, Split split,
                    const std::filesystem::path& report_dir) {
  cfg.validate(/*require_data_dir=*/true);
  if (cfg.data.dir.empty()) throw ConfigError("eval requires data.dir");
  auto model = load_checkpoint(weights);
  auto index = index_dataset(cfg.data.dir);
  if (index.nc() != model.nc) {
    throw ConfigError("checkpoint has " + std::to_string(model.nc) +
                      " classes, dataset has " + std::to_string(index.nc()));
  }
  if (cfg.data.single_split) {
    assign_all(index, Split::kTrain);
  } else {
    split_dataset(index, cfg.train.seed);
  }
  EvalSettings settings = cfg.eval;
  settings.img_size = cfg.data.img_size;
  settings.resize = cfg.data.resize;
  auto result = evaluate(model, index, split, settings);
  if (!report_dir.empty()) {
    std::filesystem::create_directories(report_dir);
    std::ofstream txt(report_dir / "report.txt");
    txt << format_eval_report(result);
    write_eval_json(result, report_dir / "report.json");
  }
  return result;
}

int cmd_detect(RunConfig cfg, const std::filesystem::path& weights,
               const std::vector<std::filesystem::path>& images,
               const std::filesystem::path& out_dir, double conf, double iou,
               bool draw) {
  cfg.validate(/*require_data_dir=*/false);
  auto model = load_checkpoint(weights);
  std::filesystem::create_directories(out_dir);
  int failures = 0;
  for (const auto& path : images) {
    try {
      Image img = read_ppm(path);
      auto [resized, tf] = resize_image(img, cfg.data.img_size, cfg.data.resize);
      auto input = reshape(image_to_tensor(resized),
                           {1, 3, cfg.data.img_size, cfg.data.img_size});
      std::array<Tensor, 3> raw;
      {
        NoGradGuard ng;
        model.training = false;
        raw = model_forward(model, input);
      }
      auto dets = decode_predictions(raw, model.anchors,
                                     {DetectorModel::kStrides[0],
                                      DetectorModel::kStrides[1],
                                      DetectorModel::kStrides[2]},
                                     conf);
      dets = cap_detections(nms(dets, iou), cfg.eval.max_detections);

      std::ofstream txt(out_dir / (path.stem().string() + ".txt"));
      if (!txt) throw IoError("cannot write detections for " + path.string());
      for (const auto& d : dets) {
        Box orig = tf.invert(d.box);
        const std::string name = d.class_id < static_cast<int>(model.class_names.size())
                                     ? model.class_names[d.class_id]
                                     : std::to_string(d.class_id);
        char row[256];
        std::snprintf(row, sizeof(row), "%s %.6f %.2f %.2f %.2f %.2f\n", name.c_str(),
                      d.score, orig.x1, orig.y1, orig.x2, orig.y2);
        txt << row;
      }
      if (draw) {
        Image annotated = img;
        for (const auto& d : dets) {
          Box orig = tf.invert(d.box);
          draw_box(annotated, orig, 255, 64, 64);
        }
        write_ppm(annotated, out_dir / (path.stem().string() + "_det.ppm"));
      }
    } catch (const Error& e) {
      std::fprintf(stderr, "detect: %s: %s\n", path.string().c_str(), e.what());
      ++failures;
    }
  }
  return failures;
}

DatasetIndex cmd_synth(const RunConfig& cfg, int n, const std::filesystem::path& out_dir) {
  cfg.synth.validate();
  auto index = generate_synthetic_dataset(cfg.synth, n, out_dir);
  write_manifest(index, out_dir / "manifest.json");
  return index;
}

}  // namespace plantdet
