// SPDX-License-Identifier: Apache-2.0
#include "plantdet/annotations.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace plantdet {

namespace {

constexpr double kEdgeSlack = 1e-6;

double parse_number(const std::string& tok, int line_no, const char* what) {
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw DataError("label line " + std::to_string(line_no) + ": non-numeric " +
                    what + " '" + tok + "'");
  }
  if (pos != tok.size()) {
    throw DataError("label line " + std::to_string(line_no) + ": non-numeric " +
                    what + " '" + tok + "'");
  }
  return v;
}

}  // namespace

std::vector<Annotation> parse_yolo_label(const std::string& text, int nc) {
  std::vector<Annotation> out;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    if (toks.size() != 5) {
      throw DataError("label line " + std::to_string(line_no) + ": expected 5 fields, got " +
                      std::to_string(toks.size()));
    }
    double cls = parse_number(toks[0], line_no, "class id");
    if (cls != std::floor(cls) || cls < 0 || cls >= nc) {
      throw DataError("label line " + std::to_string(line_no) + ": class id '" + toks[0] +
                      "' out of range [0," + std::to_string(nc) + ")");
    }
    Annotation ann;
    ann.class_id = static_cast<int>(cls);
    ann.box.cx = parse_number(toks[1], line_no, "cx");
    ann.box.cy = parse_number(toks[2], line_no, "cy");
    ann.box.w = parse_number(toks[3], line_no, "w");
    ann.box.h = parse_number(toks[4], line_no, "h");
    const double vals[4] = {ann.box.cx, ann.box.cy, ann.box.w, ann.box.h};
    for (double v : vals) {
      if (v < 0.0 || v > 1.0) {
        throw DataError("label line " + std::to_string(line_no) +
                        ": coordinate outside [0,1]");
      }
    }
    if (ann.box.cx - ann.box.w / 2 < -kEdgeSlack ||
        ann.box.cx + ann.box.w / 2 > 1 + kEdgeSlack ||
        ann.box.cy - ann.box.h / 2 < -kEdgeSlack ||
        ann.box.cy + ann.box.h / 2 > 1 + kEdgeSlack) {
      throw DataError("label line " + std::to_string(line_no) +
                      ": box extends outside the unit square");
    }
    out.push_back(ann);
  }
  return out;
}

std::string write_yolo_label(const std::vector<Annotation>& annotations) {
  std::string out;
  char buf[128];
  for (const auto& a : annotations) {
    std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6f\n", a.class_id,
                  a.box.cx, a.box.cy, a.box.w, a.box.h);
    out += buf;
  }
  return out;
}

namespace {

// Minimal tag scanner for the fixed VOC schema.
std::string tag_content(const std::string& xml, const std::string& tag, size_t from,
                        size_t to, bool required, size_t* found_at = nullptr) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  size_t a = xml.find(open, from);
  if (a == std::string::npos || a >= to) {
    if (required) throw DataError("VOC XML: missing <" + tag + ">");
    return {};
  }
  size_t b = xml.find(close, a + open.size());
  if (b == std::string::npos || b > to) {
    throw DataError("VOC XML: unterminated <" + tag + ">");
  }
  if (found_at) *found_at = a;
  return xml.substr(a + open.size(), b - a - open.size());
}

double voc_number(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("VOC XML: malformed ") + what + " '" + s + "'");
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<Annotation> parse_voc_xml(const std::string& xml,
                                      const std::vector<std::string>& class_names) {
  std::string size_block = tag_content(xml, "size", 0, xml.size(), true);
  double width = voc_number(tag_content(size_block, "width", 0, size_block.size(), true), "width");
  double height = voc_number(tag_content(size_block, "height", 0, size_block.size(), true), "height");
  if (width <= 0 || height <= 0) throw DataError("VOC XML: non-positive image size");

  std::vector<Annotation> out;
  size_t cursor = 0;
  while (true) {
    size_t a = xml.find("<object>", cursor);
    if (a == std::string::npos) break;
    size_t b = xml.find("</object>", a);
    if (b == std::string::npos) throw DataError("VOC XML: unterminated <object>");
    std::string obj = xml.substr(a, b - a);
    std::string name = trim(tag_content(obj, "name", 0, obj.size(), true));
    int cls = -1;
    for (size_t i = 0; i < class_names.size(); ++i) {
      if (class_names[i] == name) {
        cls = static_cast<int>(i);
        break;
      }
    }
    if (cls < 0) throw DataError("VOC XML: unknown class name '" + name + "'");
    std::string bnd = tag_content(obj, "bndbox", 0, obj.size(), true);
    double xmin = voc_number(tag_content(bnd, "xmin", 0, bnd.size(), true), "xmin");
    double ymin = voc_number(tag_content(bnd, "ymin", 0, bnd.size(), true), "ymin");
    double xmax = voc_number(tag_content(bnd, "xmax", 0, bnd.size(), true), "xmax");
    double ymax = voc_number(tag_content(bnd, "ymax", 0, bnd.size(), true), "ymax");
    if (xmax <= xmin || ymax <= ymin) throw DataError("VOC XML: inverted bndbox");
    Annotation ann;
    ann.class_id = cls;
    ann.box.cx = (xmin + xmax) / 2.0 / width;
    ann.box.cy = (ymin + ymax) / 2.0 / height;
    ann.box.w = (xmax - xmin) / width;
    ann.box.h = (ymax - ymin) / height;
    out.push_back(ann);
    cursor = b + 9;
  }
  return out;
}

std::string write_voc_xml(const std::vector<Annotation>& annotations,
                          const std::vector<std::string>& class_names, int width,
                          int height, const std::string& filename) {
  std::ostringstream os;
  os << "<annotation>\n";
  os << "  <filename>" << filename << "</filename>\n";
  os << "  <size>\n    <width>" << width << "</width>\n    <height>" << height
     << "</height>\n    <depth>3</depth>\n  </size>\n";
  for (const auto& a : annotations) {
    if (a.class_id < 0 || a.class_id >= static_cast<int>(class_names.size())) {
      throw DataError("write_voc_xml: class id out of range");
    }
    Box b = a.box.to_xyxy();
    os << "  <object>\n";
    os << "    <name>" << class_names[a.class_id] << "</name>\n";
    os << "    <bndbox>\n";
    os << "      <xmin>" << std::llround(b.x1 * width) << "</xmin>\n";
    os << "      <ymin>" << std::llround(b.y1 * height) << "</ymin>\n";
    os << "      <xmax>" << std::llround(b.x2 * width) << "</xmax>\n";
    os << "      <ymax>" << std::llround(b.y2 * height) << "</ymax>\n";
    os << "    </bndbox>\n";
    os << "  </object>\n";
  }
  os << "</annotation>\n";
  return os.str();
}

}  // namespace plantdet
