// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "npbg/image.hpp"
#include "npbg/scene.hpp"

namespace npbg {

// T levels; level t (0-based) is floor(h / 2^t) x floor(w / 2^t) with c
// descriptor channels followed by an occupancy channel in {0, 1}.
struct RasterPyramid {
  std::vector<BasicImage<float>> levels;
  int descriptor_channels = 0;

  int occupancy_channel() const { return descriptor_channels; }
  bool occupied(int level, int x, int y) const { return levels[level].at(x, y, descriptor_channels) != 0.0f; }
  std::size_t occupied_count(int level) const;
};

// Per-point descriptors for one target view, row-major N x c.
struct PointDescriptors {
  int channels = 0;
  std::vector<float> values;

  std::span<const float> of(std::size_t i) const {
    return {values.data() + i * channels, static_cast<std::size_t>(channels)};
  }
};

// Rasterizes every level independently: a point lands in pixel
// floor(uv / 2^t) of level t (if inside that level) and the pixel keeps the
// descriptor of the nearest point, lowest index on exact ties. Pixels with
// no point are all zero, occupancy included.
RasterPyramid rasterize_pyramid(std::span<const Vec3> points, const PointDescriptors& descriptors,
                                const CameraView& camera, int levels);

// Unit vector from the point toward the camera center. Throws
// PreconditionError if the point coincides with the center.
Vec3 view_direction(const Vec3& point, const CameraView& camera);
Vec3 view_direction(const Vec3& point, const Vec3& camera_center);

// Writes level_<t>.png (first three descriptor channels clamped to [0,1])
// and level_<t>_occupancy.png for every level into dir.
void dump_pyramid(const RasterPyramid& pyramid, const std::filesystem::path& dir);

}  // namespace npbg
