// SPDX-License-Identifier: Apache-2.0
#include "plantdet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace plantdet {

namespace {

using nlohmann::json;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& in, size_t& pos) {
  if (pos + 4 > in.size()) throw FormatError("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

uint64_t get_u64(const std::string& in, size_t& pos) {
  if (pos + 8 > in.size()) throw FormatError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

json config_echo(const DetectorModel& m) {
  json j;
  j["base_width"] = m.cfg.base_width;
  j["depth"] = m.cfg.depth;
  j["c3_stages"] = m.cfg.c3_stages;
  j["st_stages"] = m.cfg.st_stages;
  j["attention"] = m.cfg.attention == AttentionKind::kGlobal ? "global" : "window";
  j["window"] = m.cfg.window;
  j["head_dim"] = m.cfg.head_dim;
  j["mlp_ratio"] = m.cfg.mlp_ratio;
  j["rel_pos_bias"] = m.cfg.rel_pos_bias;
  j["nc"] = m.nc;
  j["seed"] = m.seed;
  j["class_names"] = m.class_names;
  auto anchors = json::array();
  for (const auto& a : m.anchors.wh) anchors.push_back({a[0], a[1]});
  j["anchors"] = anchors;
  return j;
}

}  // namespace

void save_checkpoint(const DetectorModel& model, const std::filesystem::path& path) {
  json header;
  std::string payload;
  uint64_t offset = 0;
  auto emit = [&](const std::string& name, const Tensor& t) {
    const uint64_t bytes = static_cast<uint64_t>(t.numel()) * 4;
    header[name] = {{"shape", t.shape()}, {"offset", offset}, {"length", bytes}};
    const size_t at = payload.size();
    payload.resize(at + bytes);
    std::memcpy(payload.data() + at, t.data().data(), bytes);
    offset += bytes;
  };
  for (const auto& [name, t] : model.store.params()) emit(name, t);
  for (const auto& [name, t] : model.store.buffers()) emit(name, t);

  const std::string header_s = header.dump();
  const std::string config_s = config_echo(model).dump();

  std::string out;
  out += "PDET";
  put_u32(out, kCheckpointVersion);
  put_u64(out, header_s.size());
  out += header_s;
  put_u64(out, payload.size());
  out += payload;
  put_u64(out, config_s.size());
  out += config_s;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

DetectorModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  if (blob.size() < 4 || blob.compare(0, 4, "PDET") != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  pos = 4;
  const uint32_t version = get_u32(blob, pos);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const uint64_t header_len = get_u64(blob, pos);
  if (pos + header_len > blob.size()) throw FormatError("checkpoint: truncated header");
  json header;
  try {
    header = json::parse(blob.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not valid JSON: ") + e.what());
  }
  pos += header_len;
  const uint64_t payload_len = get_u64(blob, pos);
  if (pos + payload_len > blob.size()) throw FormatError("checkpoint: truncated payload");
  const size_t payload_at = pos;
  pos += payload_len;
  const uint64_t config_len = get_u64(blob, pos);
  if (pos + config_len > blob.size()) throw FormatError("checkpoint: truncated config echo");

  json cfg_j;
  try {
    cfg_j = json::parse(blob.substr(pos, config_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: config echo is not valid JSON: ") + e.what());
  }

  DetectorModel model;
  try {
    BackboneConfig cfg;
    cfg.base_width = cfg_j.at("base_width").get<int>();
    cfg.depth = cfg_j.at("depth").get<int>();
    cfg.c3_stages = cfg_j.at("c3_stages").get<int>();
    cfg.st_stages = cfg_j.at("st_stages").get<int>();
    cfg.attention = cfg_j.at("attention").get<std::string>() == "global"
                        ? AttentionKind::kGlobal
                        : AttentionKind::kWindow;
    cfg.window = cfg_j.at("window").get<int>();
    cfg.head_dim = cfg_j.at("head_dim").get<int>();
    cfg.mlp_ratio = cfg_j.at("mlp_ratio").get<int>();
    cfg.rel_pos_bias = cfg_j.at("rel_pos_bias").get<bool>();
    AnchorSet anchors;
    const auto& aj = cfg_j.at("anchors");
    if (aj.size() != 9) throw FormatError("checkpoint: anchor list must have 9 entries");
    for (size_t i = 0; i < 9; ++i) {
      anchors.wh[i] = {aj[i][0].get<double>(), aj[i][1].get<double>()};
    }
    model = build_model<float>(cfg, cfg_j.at("nc").get<int>(), anchors,
                               cfg_j.at("class_names").get<std::vector<std::string>>(),
                               cfg_j.at("seed").get<uint64_t>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad config echo: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: config echo rejected: ") + e.what());
  }

  // Restore tensors; the header must describe exactly the rebuilt set with
  // contiguous ascending offsets.
  auto restore = [&](const std::string& name, Tensor& t) -> uint64_t {
    auto it = header.find(name);
    if (it == header.end()) throw FormatError("checkpoint: missing tensor " + name);
    uint64_t off, len;
    Shape shape;
    try {
      off = it->at("offset").get<uint64_t>();
      len = it->at("length").get<uint64_t>();
      shape = it->at("shape").get<Shape>();
    } catch (const json::exception& e) {
      throw FormatError("checkpoint: bad header entry for " + name + ": " + e.what());
    }
    if (shape != t.shape()) throw FormatError("checkpoint: shape mismatch for " + name);
    if (len != static_cast<uint64_t>(t.numel()) * 4) {
      throw FormatError("checkpoint: length mismatch for " + name);
    }
    if (off + len > payload_len) throw FormatError("checkpoint: offset out of range for " + name);
    std::memcpy(t.data().data(), blob.data() + payload_at + off, len);
    return len;
  };

  uint64_t expect_offset = 0;
  size_t described = 0;
  auto check_contiguous = [&](const std::string& name) {
    const auto& e = header.at(name);
    if (e.at("offset").get<uint64_t>() != expect_offset) {
      throw FormatError("checkpoint: non-contiguous offset for " + name);
    }
    expect_offset += e.at("length").get<uint64_t>();
    ++described;
  };
  for (auto& [name, t] : model.store.params()) {
    restore(name, t);
    check_contiguous(name);
  }
  for (auto& [name, t] : model.store.buffers()) {
    restore(name, t);
    check_contiguous(name);
  }
  if (described != header.size()) {
    throw FormatError("checkpoint: header describes unknown tensors");
  }
  if (expect_offset != payload_len) {
    throw FormatError("checkpoint: payload length mismatch");
  }
  return model;
}

}  // namespace plantdet
