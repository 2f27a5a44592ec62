// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "npbg/image.hpp"
#include "npbg/scene.hpp"

namespace npbg {

struct Projection {
  Eigen::Vector2d pixel;  // continuous (u, v)
  double depth = 0.0;     // camera-space z
  bool in_frustum = false;
};

// In frustum means z > 0, 0 <= u < width and 0 <= v < height. Pixel index
// of an in-frustum projection is (floor(u), floor(v)).
Projection project(const Vec3& point, const CameraView& camera);

// Bilinear interpolation between the four pixel centers around uv.
// Requires 0 <= u <= w - 1 and 0 <= v <= h - 1 (PreconditionError
// otherwise); exact at integer coordinates.
template <typename T>
void bilinear_sample(const BasicImage<T>& map, const Eigen::Vector2d& uv, std::span<double> out);

template <typename T>
Eigen::VectorXd bilinear_sample(const BasicImage<T>& map, const Eigen::Vector2d& uv) {
  Eigen::VectorXd out(map.channels());
  bilinear_sample(map, uv, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

struct VisibilityMask {
  std::vector<std::uint8_t> visible;
  int reduce = 0;

  std::size_t count() const;
};

// Z-buffer visibility on a ceil(h / 2^r) x ceil(w / 2^r) grid. A point is
// visible iff it is in the frustum and holds the minimum depth of its
// reduced pixel (floor(uv / 2^r)); equal depths go to the lowest index.
VisibilityMask estimate_visibility(const PointCloud& cloud, const CameraView& camera, int reduce);
VisibilityMask estimate_visibility(std::span<const Vec3> points, const CameraView& camera, int reduce);

}  // namespace npbg
