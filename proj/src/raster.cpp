// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "npbg/error.hpp"
#include "npbg/geometry.hpp"
#include "npbg/png_io.hpp"

namespace npbg {

std::size_t RasterPyramid::occupied_count(int level) const {
  const auto& img = levels[level];
  std::size_t n = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) n += occupied(level, x, y) ? 1 : 0;
  }
  return n;
}

RasterPyramid rasterize_pyramid(std::span<const Vec3> points, const PointDescriptors& descriptors,
                                const CameraView& camera, int levels) {
  if (levels < 1) throw PreconditionError("pyramid needs at least one level");
  const int c = descriptors.channels;
  if (c < 1 || descriptors.values.size() != points.size() * static_cast<std::size_t>(c)) {
    throw PreconditionError("descriptor buffer does not match the point count");
  }

  // Project once; every level bins the same continuous coordinates.
  struct Hit {
    std::uint32_t point;
    double u, v, depth;
  };
  std::vector<Hit> hits;
  hits.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Projection p = project(points[i], camera);
    if (p.in_frustum) hits.push_back({static_cast<std::uint32_t>(i), p.pixel.x(), p.pixel.y(), p.depth});
  }

  RasterPyramid pyramid;
  pyramid.descriptor_channels = c;
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  for (int t = 0; t < levels; ++t) {
    const int lw = camera.width >> t;
    const int lh = camera.height >> t;
    const double scale = std::ldexp(1.0, -t);
    BasicImage<float> level(lw, lh, c + 1, 0.0f);
    std::vector<double> zbuf(static_cast<std::size_t>(lw) * lh, std::numeric_limits<double>::infinity());
    std::vector<std::uint32_t> owner(zbuf.size(), kNone);
    for (const Hit& h : hits) {
      const auto x = static_cast<long>(std::floor(h.u * scale));
      const auto y = static_cast<long>(std::floor(h.v * scale));
      if (x >= lw || y >= lh) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * lw + x;
      if (h.depth < zbuf[idx]) {
        zbuf[idx] = h.depth;
        owner[idx] = h.point;
      }
    }
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        const std::uint32_t o = owner[static_cast<std::size_t>(y) * lw + x];
        if (o == kNone) continue;
        auto px = level.pixel(x, y);
        std::ranges::copy(descriptors.of(o), px.begin());
        px[c] = 1.0f;
      }
    }
    pyramid.levels.push_back(std::move(level));
  }
  return pyramid;
}

Vec3 view_direction(const Vec3& point, const Vec3& camera_center) {
  const Vec3 d = camera_center - point;
  const double n = d.norm();
  if (!(n > 0.0)) throw PreconditionError("view direction undefined: point coincides with the camera center");
  return d / n;
}

Vec3 view_direction(const Vec3& point, const CameraView& camera) { return view_direction(point, camera.center()); }

void dump_pyramid(const RasterPyramid& pyramid, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int c = pyramid.descriptor_channels;
  for (std::size_t t = 0; t < pyramid.levels.size(); ++t) {
    const auto& level = pyramid.levels[t];
    if (level.width() == 0 || level.height() == 0) continue;
    Image color(level.width(), level.height(), 3);
    Image occupancy(level.width(), level.height(), 3);
    for (int y = 0; y < level.height(); ++y) {
      for (int x = 0; x < level.width(); ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          color.at(x, y, ch) = ch < c ? std::clamp(level.at(x, y, ch), 0.0f, 1.0f) : 0.0f;
          occupancy.at(x, y, ch) = level.at(x, y, c);
        }
      }
    }
    write_png(dir / ("level_" + std::to_string(t + 1) + ".png"), color);
    write_png(dir / ("level_" + std::to_string(t + 1) + "_occupancy.png"), occupancy);
  }
}

}  // namespace npbg
