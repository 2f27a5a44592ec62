// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <Eigen/LU>
#include <json.hpp>

#include "json_camera.hpp"
#include "npbg/error.hpp"
#include "npbg/ply.hpp"
#include "npbg/png_io.hpp"

namespace npbg {
namespace {

constexpr double kRotationTolerance = 1e-6;

std::string camera_label(int index) {
  return index >= 0 ? "camera " + std::to_string(index) : std::string("camera");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

void validate(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    if (!cloud.positions[i].allFinite()) {
      throw ValidationError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  if (!cloud.colors.empty()) {
    if (cloud.colors.size() != cloud.positions.size()) {
      throw ValidationError("point cloud has " + std::to_string(cloud.colors.size()) + " colors for " +
                            std::to_string(cloud.positions.size()) + " points");
    }
    for (std::size_t i = 0; i < cloud.colors.size(); ++i) {
      const auto& c = cloud.colors[i];
      if (!c.allFinite() || c.minCoeff() < 0.0f || c.maxCoeff() > 1.0f) {
        throw ValidationError("point " + std::to_string(i) + " has a color outside [0,1]");
      }
    }
  }
}

void validate(const CameraView& camera, int index) {
  const std::string label = camera_label(index);
  if (camera.width <= 0 || camera.height <= 0) throw ValidationError(label + ": image size must be positive");
  if (!(camera.fx > 0.0) || !(camera.fy > 0.0) || !std::isfinite(camera.fx) || !std::isfinite(camera.fy)) {
    throw ValidationError(label + ": focal lengths must be positive");
  }
  if (!std::isfinite(camera.cx) || !std::isfinite(camera.cy) || !camera.translation.allFinite() ||
      !camera.rotation.allFinite()) {
    throw ValidationError(label + ": non-finite intrinsics or pose");
  }
  const double det = camera.rotation.determinant();
  if (std::abs(det - 1.0) > kRotationTolerance) {
    throw ValidationError(label + ": rotation determinant " + std::to_string(det) + " is not +1");
  }
  const Mat3 gram = camera.rotation * camera.rotation.transpose();
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kRotationTolerance) {
    throw ValidationError(label + ": rotation is not orthonormal");
  }
  if (camera.image && (camera.image->width() != camera.width || camera.image->height() != camera.height)) {
    throw ValidationError(label + ": image is " + std::to_string(camera.image->width()) + "x" +
                          std::to_string(camera.image->height()) + " but camera expects " +
                          std::to_string(camera.width) + "x" + std::to_string(camera.height));
  }
}

Image camera_image(const CameraView& camera) {
  if (camera.image) return *camera.image;
  if (camera.image_path.empty()) throw PreconditionError("camera has no image");
  Image image = read_png(camera.image_path);
  if (image.width() != camera.width || image.height() != camera.height) {
    throw ValidationError("image '" + camera.image_path.string() + "' does not match camera size");
  }
  return image;
}

void validate(const SceneConfig& config) {
  if (!config.world_up.allFinite() || std::abs(config.world_up.norm() - 1.0) > 1e-9) {
    throw ConfigError("world_up must be a unit vector");
  }
  if (config.descriptor_channels < 1) throw ConfigError("descriptor_channels must be >= 1");
  if (config.pyramid_levels < 1) throw ConfigError("pyramid_levels must be >= 1");
  if (config.visibility_reduce < 0 || config.visibility_reduce > 30) {
    throw ConfigError("visibility_reduce must be in [0, 30]");
  }
  if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha)) throw ConfigError("alpha must be >= 0");
  if (config.basis_size < 1) throw ConfigError("basis size must be >= 1");
  if (config.basis_kind == BasisKind::kSphericalHarmonics && config.basis_size != 1 && config.basis_size != 4 &&
      config.basis_size != 9) {
    throw ConfigError("spherical harmonics need m = 1, 4 or 9");
  }
}

DescriptorField DescriptorField::zeros(std::size_t n, std::shared_ptr<const Basis> basis, int c) {
  DescriptorField f;
  f.num_points = n;
  f.m = basis->size();
  f.c = c;
  f.beta0.assign(n * c, 0.0f);
  f.beta.assign(n * f.m * c, 0.0f);
  f.alive.assign(n, 0);
  f.basis = std::move(basis);
  return f;
}

void validate(const DescriptorField& field) {
  if (field.m < 1 || field.c < 1) throw ValidationError("descriptor field needs m >= 1 and c >= 1");
  if (!field.basis) throw ValidationError("descriptor field has no basis");
  if (field.basis->size() != field.m) throw ValidationError("descriptor field m does not match its basis");
  const std::size_t n = field.num_points;
  if (field.beta0.size() != n * field.c || field.beta.size() != n * field.m * field.c || field.alive.size() != n) {
    throw ValidationError("descriptor field arrays inconsistent with (N, m, c)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto b0 = field.beta0_of(i);
    const auto b = field.beta_of(i);
    const bool finite = std::ranges::all_of(b0, [](float v) { return std::isfinite(v); }) &&
                        std::ranges::all_of(b, [](float v) { return std::isfinite(v); });
    if (!finite) throw ValidationError("descriptor of point " + std::to_string(i) + " is not finite");
    if (!field.alive[i]) {
      const bool zero = std::ranges::all_of(b0, [](float v) { return v == 0.0f; }) &&
                        std::ranges::all_of(b, [](float v) { return v == 0.0f; });
      if (!zero) throw ValidationError("dead point " + std::to_string(i) + " carries non-zero coefficients");
    }
  }
}

bool same_values(const DescriptorField& a, const DescriptorField& b) {
  auto bits_equal = [](const std::vector<float>& x, const std::vector<float>& y) {
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
  };
  const bool basis_equal = (a.basis && b.basis) ? (*a.basis == *b.basis) : (a.basis == b.basis);
  return a.num_points == b.num_points && a.m == b.m && a.c == b.c && a.alive == b.alive &&
         bits_equal(a.beta0, b.beta0) && bits_equal(a.beta, b.beta) && basis_equal;
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("point cloud '" + path.string() + "' does not exist");
  const auto bytes = read_file_bytes(path);
  try {
    PointCloud cloud = parse_ply(bytes);
    validate(cloud);
    return cloud;
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace detail {

CameraView camera_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir, bool load_image,
                            int index) {
  const std::string where = camera_label(index);
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  CameraView cam;
  cam.width = required<int>(j, "width", where);
  cam.height = required<int>(j, "height", where);
  cam.fx = required<double>(j, "fx", where);
  cam.fy = required<double>(j, "fy", where);
  cam.cx = required<double>(j, "cx", where);
  cam.cy = required<double>(j, "cy", where);
  const auto r = required<std::vector<double>>(j, "R", where);
  const auto t = required<std::vector<double>>(j, "t", where);
  if (r.size() != 9) throw ParseError(where + ": 'R' must hold 9 values");
  if (t.size() != 3) throw ParseError(where + ": 't' must hold 3 values");
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) cam.rotation(row, col) = r[row * 3 + col];
    cam.translation[row] = t[row];
  }
  if (j.contains("image") && !j.at("image").is_null()) {
    cam.image_path = resolve(base_dir, required<std::string>(j, "image", where));
    if (!std::filesystem::exists(cam.image_path)) {
      throw IoError(where + ": image '" + cam.image_path.string() + "' does not exist");
    }
    if (load_image) cam.image = std::make_shared<const Image>(read_png(cam.image_path));
  }
  validate(cam, index);
  return cam;
}

nlohmann::json camera_to_json(const CameraView& camera) {
  nlohmann::json j;
  j["width"] = camera.width;
  j["height"] = camera.height;
  j["fx"] = camera.fx;
  j["fy"] = camera.fy;
  j["cx"] = camera.cx;
  j["cy"] = camera.cy;
  std::vector<double> r(9);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) r[row * 3 + col] = camera.rotation(row, col);
  }
  j["R"] = r;
  j["t"] = {camera.translation.x(), camera.translation.y(), camera.translation.z()};
  if (!camera.image_path.empty()) j["image"] = camera.image_path.string();
  return j;
}

}  // namespace detail

CameraView camera_from_json(const std::string& json_text, const std::filesystem::path& base_dir, bool load_image) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("camera json: ") + e.what());
  }
  return detail::camera_from_json(j, base_dir, load_image);
}

std::string camera_to_json(const CameraView& camera) { return detail::camera_to_json(camera).dump(); }

Scene load_scene(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("scene '" + path.string() + "' cannot be opened");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": expected a JSON object");
  const std::filesystem::path base = path.parent_path();
  const std::string where = path.string();

  Scene scene;
  scene.cloud = load_point_cloud(resolve(base, required<std::string>(j, "point_cloud", where)));

  SceneConfig& config = scene.config;
  if (j.contains("world_up")) {
    const auto up = required<std::vector<double>>(j, "world_up", where);
    if (up.size() != 3) throw ParseError(where + ": 'world_up' must hold 3 values");
    config.world_up = Vec3(up[0], up[1], up[2]);
  }
  if (j.contains("descriptor_channels")) config.descriptor_channels = required<int>(j, "descriptor_channels", where);
  if (j.contains("pyramid_levels")) config.pyramid_levels = required<int>(j, "pyramid_levels", where);
  if (j.contains("visibility_reduce")) config.visibility_reduce = required<int>(j, "visibility_reduce", where);
  if (j.contains("alpha")) config.alpha = required<double>(j, "alpha", where);
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    const auto kind = required<std::string>(b, "kind", where + " basis");
    if (kind == "sh") config.basis_kind = BasisKind::kSphericalHarmonics;
    else if (kind == "mlp") config.basis_kind = BasisKind::kMlp;
    else throw ParseError(where + ": unknown basis kind '" + kind + "'");
    config.basis_size = required<int>(b, "m", where + " basis");
  }
  validate(config);

  if (j.contains("cameras")) {
    const auto& cams = j.at("cameras");
    if (!cams.is_array()) throw ParseError(where + ": 'cameras' must be an array");
    for (std::size_t i = 0; i < cams.size(); ++i) {
      scene.cameras.push_back(detail::camera_from_json(cams[i], base, options.load_images, static_cast<int>(i)));
    }
  }
  return scene;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

}  // namespace npbg
