// SPDX-License-Identifier: Apache-2.0
#include "plantdet/config.hpp"

#include <fstream>

#include <json.hpp>

namespace plantdet {

namespace {

using nlohmann::json;

json to_json(const RunConfig& c) {
  json j;
  j["model"] = {
      {"base_width", c.model.backbone.base_width},
      {"depth", c.model.backbone.depth},
      {"c3_stages", c.model.backbone.c3_stages},
      {"st_stages", c.model.backbone.st_stages},
      {"attention", c.model.backbone.attention == AttentionKind::kGlobal ? "global" : "window"},
      {"window", c.model.backbone.window},
      {"head_dim", c.model.backbone.head_dim},
      {"mlp_ratio", c.model.backbone.mlp_ratio},
      {"rel_pos_bias", c.model.backbone.rel_pos_bias},
      {"nc", c.model.nc},
      {"class_names", c.model.class_names},
  };
  auto anchors = json::array();
  for (const auto& a : c.model.anchors.wh) anchors.push_back({a[0], a[1]});
  j["model"]["anchors"] = anchors;
  j["train"] = {
      {"epochs", c.train.epochs},
      {"batch", c.train.batch},
      {"lr", c.train.lr},
      {"momentum", c.train.momentum},
      {"weight_decay", c.train.weight_decay},
      {"warmup_epochs", c.train.warmup_epochs},
      {"final_lr_frac", c.train.final_lr_frac},
      {"seed", c.train.seed},
      {"eval_period", c.train.eval_period},
      {"max_steps", c.train.max_steps},
  };
  j["eval"] = {
      {"conf", c.eval.conf_threshold},
      {"iou", c.eval.nms_iou},
      {"max_det", c.eval.max_detections},
      {"eleven_point", c.eval.eleven_point},
  };
  j["data"] = {
      {"dir", c.data.dir},
      {"img_size", c.data.img_size},
      {"resize", c.data.resize == ResizeMode::kLetterbox ? "letterbox" : "stretch"},
      {"single_split", c.data.single_split},
  };
  j["loss"] = {
      {"box", c.loss.box},
      {"obj", c.loss.obj},
      {"cls", c.loss.cls},
      {"balance", c.loss.balance},
      {"pos_weight_obj", c.loss.pos_weight_obj},
      {"pos_weight_cls", c.loss.pos_weight_cls},
      {"obj_target", c.obj_target == ObjTargetKind::kCiou ? "ciou" : "iou"},
  };
  j["synth"] = {
      {"image_size", c.synth.image_size},
      {"classes", c.synth.classes},
      {"min_leaves", c.synth.min_leaves},
      {"max_leaves", c.synth.max_leaves},
      {"occlusion", c.synth.occlusion},
      {"min_radius_frac", c.synth.min_radius_frac},
      {"max_radius_frac", c.synth.max_radius_frac},
      {"seed", c.synth.seed},
      {"count", c.synth_count},
  };
  j["profile"] = c.profile;
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig from_json(const json& j) {
  RunConfig c;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    maybe(m, "base_width", c.model.backbone.base_width);
    maybe(m, "depth", c.model.backbone.depth);
    maybe(m, "c3_stages", c.model.backbone.c3_stages);
    maybe(m, "st_stages", c.model.backbone.st_stages);
    if (m.contains("attention")) {
      const std::string a = m.at("attention").get<std::string>();
      if (a == "global") {
        c.model.backbone.attention = AttentionKind::kGlobal;
      } else if (a == "window") {
        c.model.backbone.attention = AttentionKind::kWindow;
      } else {
        throw ConfigError("model.attention must be 'window' or 'global'");
      }
    }
    maybe(m, "window", c.model.backbone.window);
    maybe(m, "head_dim", c.model.backbone.head_dim);
    maybe(m, "mlp_ratio", c.model.backbone.mlp_ratio);
    maybe(m, "rel_pos_bias", c.model.backbone.rel_pos_bias);
    maybe(m, "nc", c.model.nc);
    maybe(m, "class_names", c.model.class_names);
    if (m.contains("anchors")) {
      const auto& aj = m.at("anchors");
      if (aj.size() != 9) throw ConfigError("model.anchors must list 9 (w,h) pairs");
      for (size_t i = 0; i < 9; ++i) {
        c.model.anchors.wh[i] = {aj[i][0].get<double>(), aj[i][1].get<double>()};
      }
    }
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    maybe(t, "epochs", c.train.epochs);
    maybe(t, "batch", c.train.batch);
    maybe(t, "lr", c.train.lr);
    maybe(t, "momentum", c.train.momentum);
    maybe(t, "weight_decay", c.train.weight_decay);
    maybe(t, "warmup_epochs", c.train.warmup_epochs);
    maybe(t, "final_lr_frac", c.train.final_lr_frac);
    maybe(t, "seed", c.train.seed);
    maybe(t, "eval_period", c.train.eval_period);
    maybe(t, "max_steps", c.train.max_steps);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    maybe(e, "conf", c.eval.conf_threshold);
    maybe(e, "iou", c.eval.nms_iou);
    maybe(e, "max_det", c.eval.max_detections);
    maybe(e, "eleven_point", c.eval.eleven_point);
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    maybe(d, "dir", c.data.dir);
    maybe(d, "img_size", c.data.img_size);
    if (d.contains("resize")) {
      const std::string r = d.at("resize").get<std::string>();
      if (r == "letterbox") {
        c.data.resize = ResizeMode::kLetterbox;
      } else if (r == "stretch") {
        c.data.resize = ResizeMode::kStretch;
      } else {
        throw ConfigError("data.resize must be 'stretch' or 'letterbox'");
      }
    }
    maybe(d, "single_split", c.data.single_split);
  }
  // Resolve the default class weight against nc before overrides.
  c.loss = LossWeights::defaults(c.model.nc);
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    maybe(l, "box", c.loss.box);
    maybe(l, "obj", c.loss.obj);
    maybe(l, "cls", c.loss.cls);
    maybe(l, "balance", c.loss.balance);
    maybe(l, "pos_weight_obj", c.loss.pos_weight_obj);
    maybe(l, "pos_weight_cls", c.loss.pos_weight_cls);
    if (l.contains("obj_target")) {
      const std::string o = l.at("obj_target").get<std::string>();
      if (o == "ciou") {
        c.obj_target = ObjTargetKind::kCiou;
      } else if (o == "iou") {
        c.obj_target = ObjTargetKind::kIou;
      } else {
        throw ConfigError("loss.obj_target must be 'iou' or 'ciou'");
      }
    }
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    maybe(s, "image_size", c.synth.image_size);
    maybe(s, "classes", c.synth.classes);
    maybe(s, "min_leaves", c.synth.min_leaves);
    maybe(s, "max_leaves", c.synth.max_leaves);
    maybe(s, "occlusion", c.synth.occlusion);
    maybe(s, "min_radius_frac", c.synth.min_radius_frac);
    maybe(s, "max_radius_frac", c.synth.max_radius_frac);
    maybe(s, "seed", c.synth.seed);
    maybe(s, "count", c.synth_count);
  }
  maybe(j, "profile", c.profile);
  if (!c.profile.empty()) apply_profile(c, c.profile);
  return c;
}

}  // namespace

void RunConfig::validate(bool require_data_dir) const {
  model.backbone.validate();
  model.anchors.validate();
  if (model.nc < 1) throw ConfigError("model.nc must be >= 1");
  if (!model.class_names.empty() &&
      static_cast<int>(model.class_names.size()) != model.nc) {
    throw ConfigError("model.class_names length must equal model.nc");
  }
  if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (train.batch < 1) throw ConfigError("train.batch must be >= 1");
  if (train.lr <= 0) throw ConfigError("train.lr must be positive");
  if (train.momentum < 0 || train.momentum >= 1) throw ConfigError("train.momentum outside [0,1)");
  if (train.weight_decay < 0) throw ConfigError("train.weight_decay must be >= 0");
  if (train.warmup_epochs < 0) throw ConfigError("train.warmup_epochs must be >= 0");
  if (train.eval_period < 1) throw ConfigError("train.eval_period must be >= 1");
  if (data.img_size < 32 || data.img_size % 32 != 0) {
    throw ConfigError("data.img_size must be a positive multiple of 32");
  }
  if (eval.conf_threshold < 0 || eval.conf_threshold > 1) {
    throw ConfigError("eval.conf outside [0,1]");
  }
  if (eval.nms_iou < 0 || eval.nms_iou > 1) throw ConfigError("eval.iou outside [0,1]");
  loss.validate();
  synth.validate();
  if (synth_count < 1) throw ConfigError("synth.count must be >= 1");
  if (require_data_dir && !data.dir.empty() &&
      !std::filesystem::is_directory(data.dir)) {
    throw ConfigError("data.dir does not exist: " + data.dir);
  }
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return parse(os.str());
}

RunConfig RunConfig::parse(const std::string& json_text) {
  try {
    return from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write config " + path.string());
  f << dump() << "\n";
}

std::string RunConfig::dump() const { return to_json(*this).dump(2); }

void apply_profile(RunConfig& cfg, const std::string& name) {
  if (name.empty() || name == "default") return;
  if (name == "smoke") {
    cfg.profile = "smoke";
    cfg.model.backbone.base_width = 16;
    cfg.model.backbone.c3_stages = 2;
    cfg.model.backbone.st_stages = 2;
    cfg.model.nc = 3;
    cfg.model.class_names.clear();
    cfg.train.epochs = 150;
    cfg.train.batch = 4;
    cfg.train.lr = 0.01;
    cfg.train.warmup_epochs = 3;
    cfg.train.eval_period = 10;
    cfg.train.max_steps = 300;
    cfg.data.img_size = 128;
    cfg.data.single_split = true;
    cfg.synth.image_size = 128;
    cfg.synth.classes = 3;
    cfg.synth.min_leaves = 1;
    cfg.synth.max_leaves = 3;
    cfg.synth.occlusion = 0.0;
    cfg.synth.min_radius_frac = 0.10;
    cfg.synth.max_radius_frac = 0.22;
    cfg.synth_count = 8;
    cfg.loss = LossWeights::defaults(cfg.model.nc);
    return;
  }
  if (name == "micro") {
    // Fast functional profile for harness checks: a few steps, tiny maps.
    apply_profile(cfg, "smoke");
    cfg.profile = "micro";
    cfg.train.epochs = 2;
    cfg.train.eval_period = 1;
    cfg.train.max_steps = 4;
    cfg.data.img_size = 64;
    cfg.synth.image_size = 64;
    cfg.synth_count = 4;
    return;
  }
  throw ConfigError("unknown profile '" + name + "'");
}

}  // namespace plantdet
