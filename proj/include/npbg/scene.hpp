// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "npbg/basis.hpp"
#include "npbg/image.hpp"

namespace npbg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// World-space points with optional per-point RGB in [0,1].
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Eigen::Vector3f> colors;  // empty or one per position

  std::size_t size() const { return positions.size(); }
  bool has_colors() const { return !colors.empty(); }
};

// Throws ValidationError naming the first offending element.
void validate(const PointCloud& cloud);

// Pinhole camera. World-to-camera: x_cam = rotation * x_world + translation.
// Pixel centers sit at integer coordinates, u to the right, v downward:
//   u = fx * x / z + cx,  v = fy * y / z + cy.
struct CameraView {
  int width = 0;
  int height = 0;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  // Decoded source image, shared between copies of the camera. Null for
  // render targets and lazily loaded scenes.
  std::shared_ptr<const Image> image;
  std::filesystem::path image_path;

  Vec3 center() const { return -(rotation.transpose() * translation); }
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
};

// Throws ValidationError if the rotation is not a proper orthonormal matrix
// (within 1e-6), focal lengths are not positive, or an attached image does
// not match (height, width). index is reported in the message when >= 0.
void validate(const CameraView& camera, int index = -1);

// Returns the attached image, reading it from image_path if necessary.
Image camera_image(const CameraView& camera);

struct SceneConfig {
  Vec3 world_up = Vec3::UnitZ();
  int descriptor_channels = 8;
  int pyramid_levels = 5;
  int visibility_reduce = 0;
  double alpha = 1.0;
  BasisKind basis_kind = BasisKind::kMlp;
  int basis_size = 6;
};

void validate(const SceneConfig& config);

// Finalized per-point descriptor coefficients. beta0 is N x c, beta is
// N x m x c (row-major over m within a point). Points that were never seen
// are marked dead and carry zero coefficients.
struct DescriptorField {
  std::size_t num_points = 0;
  int m = 0;
  int c = 0;
  std::vector<float> beta0;
  std::vector<float> beta;
  std::vector<std::uint8_t> alive;
  std::shared_ptr<const Basis> basis;

  std::span<const float> beta0_of(std::size_t i) const {
    return {beta0.data() + i * c, static_cast<std::size_t>(c)};
  }
  std::span<const float> beta_of(std::size_t i) const {
    return {beta.data() + i * m * c, static_cast<std::size_t>(m) * c};
  }

  static DescriptorField zeros(std::size_t n, std::shared_ptr<const Basis> basis, int c);
};

// Dimension consistency, finiteness and the dead-point-is-zero rule.
void validate(const DescriptorField& field);

bool same_values(const DescriptorField& a, const DescriptorField& b);

struct LoadOptions {
  bool load_images = true;  // decode PNGs now, or only check they exist
};

struct Scene {
  PointCloud cloud;
  std::vector<CameraView> cameras;
  SceneConfig config;
};

PointCloud load_point_cloud(const std::filesystem::path& path);

// Reads the scene JSON; relative paths resolve against the file's directory.
Scene load_scene(const std::filesystem::path& path, const LoadOptions& options = {});

// Camera object in scene-file schema. base_dir resolves a relative "image"
// path; an absent "image" key leaves the camera without an image.
CameraView camera_from_json(const std::string& json_text, const std::filesystem::path& base_dir = {},
                            bool load_image = false);
std::string camera_to_json(const CameraView& camera);

// NPBD container: see descriptor_io.cpp for the byte layout.
std::vector<std::uint8_t> serialize_descriptor_field(const DescriptorField& field);
DescriptorField deserialize_descriptor_field(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);
void save_descriptor_field(const DescriptorField& field, const std::filesystem::path& path);
DescriptorField load_descriptor_field(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace npbg
