// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "plantdet/model.hpp"

namespace plantdet {

/// Binary checkpoint layout (all integers little-endian):
///   "PDET" | u32 version | u64 header_len | header JSON
///   | u64 payload_len | fp32 payload | u64 config_len | config JSON
/// The header maps each tensor name to {shape, offset, length}; offsets are
/// contiguous and ascending in name order (parameters first, then buffers).
/// The config echo carries the backbone settings, anchors, class names and
/// seed needed to rebuild the model before loading values.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const DetectorModel& model, const std::filesystem::path& path);

/// Rebuilds the model from the config echo and restores every tensor
/// bit-exactly. Bad magic, version, offsets or truncation raise FormatError.
DetectorModel load_checkpoint(const std::filesystem::path& path);

}  // namespace plantdet
