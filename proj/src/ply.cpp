// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/ply.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "npbg/error.hpp"

namespace npbg {
namespace {

enum class Format { kAscii, kBinaryLE, kBinaryBE };

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUInt8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUInt16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUInt32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  Format format = Format::kAscii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const std::size_t end = text.find("end_header");
  if (text.substr(0, 3) != "ply" || end == std::string_view::npos) {
    throw ParseError("ply: missing 'ply' magic or 'end_header'");
  }
  std::size_t body = text.find('\n', end);
  if (body == std::string_view::npos) throw ParseError("ply: header not terminated by newline");
  Header header;
  header.body_offset = body + 1;

  std::istringstream lines{std::string(text.substr(0, end))};
  std::string line;
  bool have_format = false;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword.empty() || keyword == "ply" || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string fmt;
      std::string version;
      words >> fmt >> version;
      if (fmt == "ascii") header.format = Format::kAscii;
      else if (fmt == "binary_little_endian") header.format = Format::kBinaryLE;
      else if (fmt == "binary_big_endian") header.format = Format::kBinaryBE;
      else throw ParseError("ply: unknown format '" + fmt + "'");
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      words >> e.name >> count;
      if (!words || count < 0) throw ParseError("ply: malformed element line '" + line + "'");
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) throw ParseError("ply: property before any element");
      Property p;
      std::string type;
      words >> type;
      if (type == "list") {
        std::string count_type;
        std::string item_type;
        words >> count_type >> item_type >> p.name;
        auto ct = scalar_type(count_type);
        auto it = scalar_type(item_type);
        if (!ct || !it) throw ParseError("ply: bad list property '" + line + "'");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
      } else {
        words >> p.name;
        auto t = scalar_type(type);
        if (!t) throw ParseError("ply: unknown property type '" + type + "'");
        p.type = *t;
      }
      if (p.name.empty()) throw ParseError("ply: property without name");
      header.elements.back().properties.push_back(std::move(p));
    } else {
      throw ParseError("ply: unexpected header line '" + line + "'");
    }
  }
  if (!have_format) throw ParseError("ply: missing format line");
  return header;
}

// Sequential scalar reader over the body, either ASCII tokens or packed binary.
class BodyReader {
 public:
  BodyReader(std::span<const std::uint8_t> body, Format format) : body_(body), format_(format) {}

  double read(ScalarType t) {
    if (format_ == Format::kAscii) return read_ascii();
    const std::size_t n = scalar_size(t);
    if (offset_ + n > body_.size()) throw ParseError("ply: unexpected end of binary body");
    std::uint8_t raw[8];
    std::memcpy(raw, body_.data() + offset_, n);
    offset_ += n;
    const bool swap = (format_ == Format::kBinaryBE) == (std::endian::native == std::endian::little);
    if (swap) std::reverse(raw, raw + n);
    switch (t) {
      case ScalarType::kInt8: return static_cast<double>(static_cast<std::int8_t>(raw[0]));
      case ScalarType::kUInt8: return static_cast<double>(raw[0]);
      case ScalarType::kInt16: return static_cast<double>(load<std::int16_t>(raw));
      case ScalarType::kUInt16: return static_cast<double>(load<std::uint16_t>(raw));
      case ScalarType::kInt32: return static_cast<double>(load<std::int32_t>(raw));
      case ScalarType::kUInt32: return static_cast<double>(load<std::uint32_t>(raw));
      case ScalarType::kFloat32: return static_cast<double>(load<float>(raw));
      case ScalarType::kFloat64: return load<double>(raw);
    }
    return 0.0;
  }

 private:
  template <typename T>
  static T load(const std::uint8_t* raw) {
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }

  double read_ascii() {
    while (offset_ < body_.size() && std::isspace(body_[offset_])) ++offset_;
    if (offset_ >= body_.size()) throw ParseError("ply: unexpected end of ascii body");
    std::size_t end = offset_;
    while (end < body_.size() && !std::isspace(body_[end])) ++end;
    const std::string token(reinterpret_cast<const char*>(body_.data() + offset_), end - offset_);
    offset_ = end;
    // strtod accepts nan/inf spellings, which are then rejected as non-finite.
    char* stop = nullptr;
    const double v = std::strtod(token.c_str(), &stop);
    if (stop != token.c_str() + token.size()) throw ParseError("ply: bad ascii number '" + token + "'");
    return v;
  }

  std::span<const std::uint8_t> body_;
  Format format_;
  std::size_t offset_ = 0;
};

}  // namespace

PointCloud parse_ply(std::span<const std::uint8_t> bytes) {
  const Header header = parse_header(bytes);
  BodyReader reader(bytes.subspan(header.body_offset), header.format);
  PointCloud cloud;
  bool seen_vertex = false;
  for (const Element& element : header.elements) {
    const bool is_vertex = element.name == "vertex";
    if (!is_vertex) {
      if (seen_vertex) break;
      for (std::size_t i = 0; i < element.count; ++i) {
        for (const Property& p : element.properties) {
          const auto n = p.is_list ? static_cast<std::size_t>(reader.read(p.count_type)) : 1;
          for (std::size_t k = 0; k < n; ++k) reader.read(p.type);
        }
      }
      continue;
    }
    seen_vertex = true;
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (int k = 0; k < static_cast<int>(element.properties.size()); ++k) {
      const std::string& n = element.properties[k].name;
      if (n == "x") ix = k;
      else if (n == "y") iy = k;
      else if (n == "z") iz = k;
      else if (n == "red" || n == "r") ir = k;
      else if (n == "green" || n == "g") ig = k;
      else if (n == "blue" || n == "b") ib = k;
    }
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError("ply: vertex element lacks x, y, z");
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
    cloud.positions.reserve(element.count);
    if (has_color) cloud.colors.reserve(element.count);
    std::vector<double> values(element.properties.size());
    for (std::size_t i = 0; i < element.count; ++i) {
      for (std::size_t k = 0; k < element.properties.size(); ++k) {
        const Property& p = element.properties[k];
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(reader.read(p.count_type));
          for (std::size_t j = 0; j < n; ++j) reader.read(p.type);
          values[k] = 0.0;
        } else {
          values[k] = reader.read(p.type);
        }
      }
      const Vec3 pos(values[ix], values[iy], values[iz]);
      if (!pos.allFinite()) {
        throw ParseError("ply: vertex " + std::to_string(i) + " has a non-finite coordinate");
      }
      cloud.positions.push_back(pos);
      if (has_color) {
        Eigen::Vector3f rgb;
        const int idx[3] = {ir, ig, ib};
        for (int ch = 0; ch < 3; ++ch) {
          const Property& p = element.properties[idx[ch]];
          const double raw = values[idx[ch]];
          const bool is_float = p.type == ScalarType::kFloat32 || p.type == ScalarType::kFloat64;
          const double scale = is_float ? 1.0 : (p.type == ScalarType::kUInt16 ? 65535.0 : 255.0);
          const double v = raw / scale;
          if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ParseError("ply: vertex " + std::to_string(i) + " has a color outside [0,1]");
          }
          rgb[ch] = static_cast<float>(v);
        }
        cloud.colors.push_back(rgb);
      }
    }
  }
  if (!seen_vertex) throw ParseError("ply: no vertex element");
  return cloud;
}

std::vector<std::uint8_t> format_ply(const PointCloud& cloud, PlyEncoding encoding) {
  std::ostringstream head;
  head << "ply\nformat " << (encoding == PlyEncoding::kAscii ? "ascii" : "binary_little_endian") << " 1.0\n"
       << "element vertex " << cloud.size() << "\n"
       << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) head << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  head << "end_header\n";
  const std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  auto to_byte = [](float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3f p = cloud.positions[i].cast<float>();
    if (encoding == PlyEncoding::kAscii) {
      std::ostringstream line;
      line.precision(9);
      line << p.x() << ' ' << p.y() << ' ' << p.z();
      if (cloud.has_colors()) {
        for (int ch = 0; ch < 3; ++ch) line << ' ' << static_cast<int>(to_byte(cloud.colors[i][ch]));
      }
      line << '\n';
      const std::string s = line.str();
      out.insert(out.end(), s.begin(), s.end());
    } else {
      const auto* raw = reinterpret_cast<const std::uint8_t*>(p.data());
      out.insert(out.end(), raw, raw + 3 * sizeof(float));
      if (cloud.has_colors()) {
        for (int ch = 0; ch < 3; ++ch) out.push_back(to_byte(cloud.colors[i][ch]));
      }
    }
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyEncoding encoding) {
  write_file_bytes(path, format_ply(cloud, encoding));
}

}  // namespace npbg
