// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "plantdet/boxes.hpp"

namespace plantdet {

/// YOLO label text: one `class cx cy w h` per non-empty line, normalized,
/// whitespace-separated. Errors carry the 1-based line number.
std::vector<Annotation> parse_yolo_label(const std::string& text, int nc);

/// Serializes with six decimals, one line per annotation.
std::string write_yolo_label(const std::vector<Annotation>& annotations);

/// VOC XML: reads <size> and every <object>, mapping <name> through the
/// class-name list and converting pixel corners to normalized centers.
std::vector<Annotation> parse_voc_xml(const std::string& xml,
                                      const std::vector<std::string>& class_names);

/// Writes VOC XML with integer pixel corners.
std::string write_voc_xml(const std::vector<Annotation>& annotations,
                          const std::vector<std::string>& class_names, int width,
                          int height, const std::string& filename = "image");

}  // namespace plantdet
