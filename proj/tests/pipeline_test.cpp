// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "plantdet/ablate.hpp"
#include "plantdet/train.hpp"

#include <json.hpp>

using namespace plantdet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("plantdet_pipe_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

RunConfig micro_config(uint64_t seed) {
  RunConfig cfg;
  apply_profile(cfg, "micro");
  cfg.train.seed = seed;
  cfg.synth.seed = seed + 1;
  return cfg;
}

}  // namespace

TEST_CASE("config defaults echo the documented training settings") {
  RunConfig cfg;
  CHECK(cfg.train.epochs == 300);
  CHECK(cfg.train.batch == 32);
  CHECK(cfg.train.lr == 0.01);
  CHECK(cfg.data.img_size == 640);
  CHECK(cfg.model.backbone.c3_stages == 2);
  CHECK(cfg.model.backbone.st_stages == 2);
}

TEST_CASE("config JSON round trip and validation") {
  RunConfig cfg;
  cfg.model.nc = 5;
  cfg.train.lr = 0.005;
  cfg.data.resize = ResizeMode::kLetterbox;
  cfg.obj_target = ObjTargetKind::kCiou;
  auto text = cfg.dump();
  auto back = RunConfig::parse(text);
  CHECK(back.model.nc == 5);
  CHECK(back.train.lr == 0.005);
  CHECK(back.data.resize == ResizeMode::kLetterbox);
  CHECK(back.obj_target == ObjTargetKind::kCiou);

  CHECK_THROWS_AS(RunConfig::parse("{ not json"), ConfigError);
  RunConfig bad;
  bad.train.lr = -1;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  RunConfig bad_img;
  bad_img.data.img_size = 100;
  CHECK_THROWS_AS(bad_img.validate(false), ConfigError);
}

TEST_CASE("validation is total: no side effects on a broken config") {
  RunConfig cfg = micro_config(1);
  cfg.data.dir = "/definitely/not/here";
  auto dir = temp_dir("invalid");
  CHECK_THROWS_AS(cmd_train(cfg, dir / "run"), ConfigError);
  CHECK(!fs::exists(dir / "run" / "metrics.csv"));
}

TEST_CASE("lr schedule: warmup then cosine floor") {
  TrainSettings s;
  s.lr = 0.01;
  s.epochs = 100;
  s.warmup_epochs = 3;
  s.final_lr_frac = 0.05;
  CHECK(lr_at(s, 0.0) == doctest::Approx(0.001));
  CHECK(lr_at(s, 3.0) == doctest::Approx(0.01));
  CHECK(lr_at(s, 100.0) == doctest::Approx(0.01 * 0.05));
  // Monotone decay after warmup.
  double prev = lr_at(s, 3.0);
  for (double e = 4; e <= 100; e += 4) {
    double now = lr_at(s, e);
    CHECK(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("micro training run: artifacts, determinism of the metrics log") {
  auto dir = temp_dir("train_det");
  auto r1 = cmd_train(micro_config(11), dir / "a");
  CHECK(fs::exists(r1.metrics_csv));
  CHECK(fs::exists(r1.best_checkpoint));
  CHECK(fs::exists(r1.last_checkpoint));
  CHECK(r1.steps > 0);
  CHECK(r1.first_batch_hash != 0);

  auto r2 = cmd_train(micro_config(11), dir / "b");
  CHECK(slurp(r1.metrics_csv) == slurp(r2.metrics_csv));
  CHECK(r1.first_batch_hash == r2.first_batch_hash);
  // Checkpoints byte-identical across identical runs.
  CHECK(slurp(r1.last_checkpoint) == slurp(r2.last_checkpoint));

  auto r3 = cmd_train(micro_config(12), dir / "c");
  CHECK(slurp(r1.metrics_csv) != slurp(r3.metrics_csv));
}

TEST_CASE("cmd_eval reproduces the training-loop evaluation exactly") {
  auto dir = temp_dir("eval");
  RunConfig cfg = micro_config(21);
  auto tr = cmd_train(cfg, dir / "run");

  RunConfig eval_cfg = cfg;
  eval_cfg.data.dir = (dir / "run" / "data").string();
  auto result = cmd_eval(eval_cfg, tr.last_checkpoint, Split::kTrain, dir / "report");
  CHECK(result.map50 == doctest::Approx(tr.final_eval.map50).epsilon(1e-12));
  CHECK(result.precision == doctest::Approx(tr.final_eval.precision).epsilon(1e-12));

  CHECK(fs::exists(dir / "report" / "report.txt"));
  CHECK(fs::exists(dir / "report" / "report.json"));

  // Report JSON round-trips through a schema check.
  nlohmann::json j;
  std::ifstream f(dir / "report" / "report.json");
  f >> j;
  CHECK(j.contains("map50"));
  CHECK(j.contains("precision"));
  CHECK(j.contains("recall"));
  CHECK(j.contains("f1_threshold"));
  CHECK(j.contains("images"));
  REQUIRE(j.contains("classes"));
  for (const auto& c : j["classes"]) {
    CHECK(c.contains("id"));
    CHECK(c.contains("name"));
    CHECK(c.contains("ap50"));
    CHECK(c.contains("precision"));
    CHECK(c.contains("recall"));
    CHECK(c.contains("gt_count"));
    CHECK(c.contains("size"));
    CHECK(c["ap50"].get<double>() >= 0.0);
    CHECK(c["ap50"].get<double>() <= 1.0);
  }
}

TEST_CASE("cmd_eval rejects missing data and class mismatches") {
  auto dir = temp_dir("eval_bad");
  RunConfig cfg = micro_config(23);
  auto tr = cmd_train(cfg, dir / "run");

  RunConfig no_data = cfg;
  no_data.data.dir.clear();
  CHECK_THROWS_AS(cmd_eval(no_data, tr.last_checkpoint, Split::kTest, ""), ConfigError);

  // Single-split data has an empty test split: a data error, not a crash.
  RunConfig empty_split = cfg;
  empty_split.data.dir = (dir / "run" / "data").string();
  CHECK_THROWS_AS(cmd_eval(empty_split, tr.last_checkpoint, Split::kTest, ""),
                  DataError);

  // A dataset with a different class count must be rejected.
  RunConfig synth_cfg = micro_config(24);
  synth_cfg.synth.classes = 5;
  auto other = cmd_synth(synth_cfg, 4, dir / "other");
  RunConfig eval_cfg = cfg;
  eval_cfg.data.dir = (dir / "other").string();
  CHECK_THROWS_AS(cmd_eval(eval_cfg, tr.last_checkpoint, Split::kTrain, ""), ConfigError);
}

TEST_CASE("cmd_detect writes per-image detections and survives bad files") {
  auto dir = temp_dir("detect");
  RunConfig cfg = micro_config(31);
  auto tr = cmd_train(cfg, dir / "run");

  std::vector<fs::path> images;
  auto index = read_manifest(dir / "run" / "manifest.json");
  images.push_back(index.items[0].image_path);
  images.push_back(dir / "missing.ppm");  // unreadable, must not abort
  int failures = cmd_detect(cfg, tr.last_checkpoint, images, dir / "out", 0.001, 0.5,
                            true);
  CHECK(failures == 1);
  const auto stem = images[0].stem().string();
  CHECK(fs::exists(dir / "out" / (stem + ".txt")));
  CHECK(fs::exists(dir / "out" / (stem + "_det.ppm")));

  // conf 1.0 keeps nothing.
  int fail2 = cmd_detect(cfg, tr.last_checkpoint, {images[0]}, dir / "out2", 1.0, 0.5,
                         false);
  CHECK(fail2 == 0);
  std::string txt = slurp(dir / "out2" / (stem + ".txt"));
  CHECK(txt.empty());
}

TEST_CASE("detect coordinates invert the resize transform") {
  auto dir = temp_dir("detect_coords");
  // Train at 64 but detect on a 128x128 image: boxes must map back.
  RunConfig cfg = micro_config(41);
  auto tr = cmd_train(cfg, dir / "run");

  RunConfig synth_cfg = micro_config(41);
  synth_cfg.synth.image_size = 128;
  synth_cfg.synth.classes = 3;
  auto big = cmd_synth(synth_cfg, 1, dir / "big");
  // conf 0 keeps every candidate: the barely-trained model only needs to
  // demonstrate the pixel mapping here.
  int failures = cmd_detect(cfg, tr.last_checkpoint, {big.items[0].image_path},
                            dir / "out", 0.0, 0.5, false);
  CHECK(failures == 0);

  // In-process reference: same checkpoint, same settings, manual inverse.
  auto model = load_checkpoint(tr.last_checkpoint);
  model.training = false;
  Image img = read_ppm(big.items[0].image_path);
  auto [resized, tf] = resize_image(img, cfg.data.img_size, cfg.data.resize);
  auto input = reshape(image_to_tensor(resized),
                       {1, 3, cfg.data.img_size, cfg.data.img_size});
  std::array<Tensor, 3> raw;
  {
    NoGradGuard ng;
    raw = model_forward(model, input);
  }
  auto want = cap_detections(
      nms(decode_predictions(raw, model.anchors, {8, 16, 32}, 0.0), 0.5),
      cfg.eval.max_detections);

  std::ifstream f(dir / "out" / (big.items[0].image_path.stem().string() + ".txt"));
  std::string name;
  double score, x1, y1, x2, y2;
  size_t rows = 0;
  while (f >> name >> score >> x1 >> y1 >> x2 >> y2) {
    REQUIRE(rows < want.size());
    Box orig = tf.invert(want[rows].box);
    CHECK(std::abs(x1 - orig.x1) <= 0.01);
    CHECK(std::abs(y1 - orig.y1) <= 0.01);
    CHECK(std::abs(x2 - orig.x2) <= 0.01);
    CHECK(std::abs(y2 - orig.y2) <= 0.01);
    ++rows;
  }
  CHECK(rows == want.size());
  CHECK(rows > 0);
}

TEST_CASE("ablation combination grid: five rows in order, shared batches") {
  auto dir = temp_dir("ablate_comb");
  RunConfig cfg = micro_config(51);
  auto rows = cmd_ablate(cfg, AblationGrid::kCombination, dir);
  REQUIRE(rows.size() == 5);
  const std::pair<int, int> want[5] = {{0, 4}, {1, 3}, {2, 2}, {3, 1}, {4, 0}};
  for (int i = 0; i < 5; ++i) {
    CHECK(rows[i].c3 == want[i].first);
    CHECK(rows[i].st == want[i].second);
    CHECK(rows[i].params > 0);
  }
  // Shared seed means identical first batches across all arms.
  for (const auto& row : rows) {
    CHECK(row.first_batch_hash == rows[0].first_batch_hash);
  }
  CHECK(fs::exists(dir / "table.txt"));
  auto table = slurp(dir / "table.txt");
  CHECK(table.find("mAP@0.5") != std::string::npos);
}

TEST_CASE("ablation attention grid: three arms with the expected kinds") {
  auto dir = temp_dir("ablate_attn");
  RunConfig cfg = micro_config(52);
  auto rows = cmd_ablate(cfg, AblationGrid::kAttention, dir);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].name == "baseline");
  CHECK(rows[0].c3 == 4);
  CHECK(rows[1].name == "baseline+msa");
  CHECK(rows[1].attention == "msa");
  CHECK(rows[2].name == "baseline+wmsa");
  CHECK(rows[2].attention == "wmsa");
  CHECK(rows[0].first_batch_hash == rows[1].first_batch_hash);
  CHECK(rows[1].first_batch_hash == rows[2].first_batch_hash);
  // The two (2,2) arms have identical parameter counts (same shapes, only
  // the attention span differs); the baseline differs.
  CHECK(rows[1].params == rows[2].params);
  CHECK(rows[0].params != rows[1].params);
}

TEST_CASE("cmd_synth writes a manifest listing exactly n images") {
  auto dir = temp_dir("synth_cmd");
  RunConfig cfg = micro_config(61);
  cfg.synth.classes = 21;  // a realistic many-class configuration
  auto index = cmd_synth(cfg, 10, dir / "data");
  CHECK(index.items.size() == 10);
  auto manifest = read_manifest(dir / "data" / "manifest.json");
  CHECK(manifest.items.size() == 10);
  CHECK(manifest.class_names.size() == 21);

  auto again = cmd_synth(cfg, 10, dir / "data2");
  for (size_t i = 0; i < index.items.size(); ++i) {
    CHECK(slurp(index.items[i].image_path) == slurp(again.items[i].image_path));
    CHECK(slurp(index.items[i].label_path) == slurp(again.items[i].label_path));
  }
}

TEST_CASE("profiles resolve and unknown profiles are config errors") {
  RunConfig cfg;
  apply_profile(cfg, "smoke");
  CHECK(cfg.model.backbone.base_width == 16);
  CHECK(cfg.train.max_steps == 300);
  CHECK(cfg.synth_count == 8);
  CHECK(cfg.data.single_split);
  RunConfig cfg2;
  CHECK_THROWS_AS(apply_profile(cfg2, "warp9"), ConfigError);
}
