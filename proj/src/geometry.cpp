// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npbg/error.hpp"

namespace npbg {

Projection project(const Vec3& point, const CameraView& camera) {
  const Vec3 p = camera.to_camera(point);
  Projection out;
  out.depth = p.z();
  out.pixel = Eigen::Vector2d(camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy);
  out.in_frustum = p.z() > 0.0 && out.pixel.x() >= 0.0 && out.pixel.x() < camera.width && out.pixel.y() >= 0.0 &&
                   out.pixel.y() < camera.height;
  return out;
}

template <typename T>
void bilinear_sample(const BasicImage<T>& map, const Eigen::Vector2d& uv, std::span<double> out) {
  const double u = uv.x();
  const double v = uv.y();
  if (!(u >= 0.0 && v >= 0.0 && u <= map.width() - 1 && v <= map.height() - 1)) {
    throw PreconditionError("bilinear_sample: coordinate outside the pixel-center range");
  }
  if (out.size() != static_cast<std::size_t>(map.channels())) {
    throw PreconditionError("bilinear_sample: output span has wrong length");
  }
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, map.width() - 1);
  const int y1 = std::min(y0 + 1, map.height() - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const auto p00 = map.pixel(x0, y0);
  const auto p10 = map.pixel(x1, y0);
  const auto p01 = map.pixel(x0, y1);
  const auto p11 = map.pixel(x1, y1);
  for (int c = 0; c < map.channels(); ++c) {
    const double top = (1.0 - fx) * p00[c] + fx * p10[c];
    const double bottom = (1.0 - fx) * p01[c] + fx * p11[c];
    out[c] = (1.0 - fy) * top + fy * bottom;
  }
}

template void bilinear_sample(const BasicImage<float>&, const Eigen::Vector2d&, std::span<double>);
template void bilinear_sample(const BasicImage<double>&, const Eigen::Vector2d&, std::span<double>);

std::size_t VisibilityMask::count() const { return static_cast<std::size_t>(std::ranges::count(visible, 1)); }

VisibilityMask estimate_visibility(const PointCloud& cloud, const CameraView& camera, int reduce) {
  return estimate_visibility(std::span<const Vec3>(cloud.positions), camera, reduce);
}

VisibilityMask estimate_visibility(std::span<const Vec3> points, const CameraView& camera, int reduce) {
  if (reduce < 0 || reduce > 30) throw PreconditionError("visibility reduction factor must be in [0, 30]");
  const int scale = 1 << reduce;
  const int rw = (camera.width + scale - 1) / scale;
  const int rh = (camera.height + scale - 1) / scale;

  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<double> zbuf(static_cast<std::size_t>(rw) * rh, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> owner(zbuf.size(), kNone);

  for (std::size_t i = 0; i < points.size(); ++i) {
    const Projection p = project(points[i], camera);
    if (!p.in_frustum) continue;
    const int bx = static_cast<int>(std::floor(p.pixel.x())) >> reduce;
    const int by = static_cast<int>(std::floor(p.pixel.y())) >> reduce;
    const std::size_t bin = static_cast<std::size_t>(by) * rw + bx;
    // Strict less keeps the earliest index on exact ties.
    if (p.depth < zbuf[bin]) {
      zbuf[bin] = p.depth;
      owner[bin] = static_cast<std::uint32_t>(i);
    }
  }

  VisibilityMask mask;
  mask.reduce = reduce;
  mask.visible.assign(points.size(), 0);
  for (const std::uint32_t o : owner) {
    if (o != kNone) mask.visible[o] = 1;
  }
  return mask;
}

}  // namespace npbg
