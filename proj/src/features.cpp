// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/features.hpp"

#include <algorithm>
#include <cmath>

#include "npbg/error.hpp"

namespace npbg {

ReferenceFeatureExtractor::ReferenceFeatureExtractor(int channels) {
  if (channels != kChannels) {
    throw ConfigError("reference feature extractor emits exactly 8 channels, " + std::to_string(channels) +
                      " requested");
  }
}

FeatureMap ReferenceFeatureExtractor::extract(const Image& image, const CameraView&) const { return extract(image); }

FeatureMap ReferenceFeatureExtractor::extract(const Image& image) const {
  if (image.channels() != 3) throw PreconditionError("feature extraction expects an RGB image");
  const int w = image.width();
  const int h = image.height();
  std::vector<double> lum(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      lum[static_cast<std::size_t>(y) * w + x] =
          (static_cast<double>(image.at(x, y, 0)) + image.at(x, y, 1) + image.at(x, y, 2)) / 3.0;
    }
  }
  auto L = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return lum[static_cast<std::size_t>(y) * w + x];
  };

  FeatureMap out(w, h, kChannels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (L(x + 1, y - 1) + 2.0 * L(x + 1, y) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2.0 * L(x - 1, y) + L(x - 1, y + 1));
      const double gy = (L(x - 1, y + 1) + 2.0 * L(x, y + 1) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2.0 * L(x, y - 1) + L(x + 1, y - 1));
      const double dx = gx / 8.0;
      const double dy = gy / 8.0;

      double sum = 0.0;
      for (int j = -2; j <= 2; ++j) {
        for (int i = -2; i <= 2; ++i) sum += L(x + i, y + j);
      }
      const double mean = sum / 25.0;
      double var = 0.0;
      for (int j = -2; j <= 2; ++j) {
        for (int i = -2; i <= 2; ++i) {
          const double d = L(x + i, y + j) - mean;
          var += d * d;
        }
      }
      var /= 25.0;

      auto px = out.pixel(x, y);
      px[0] = image.at(x, y, 0);
      px[1] = image.at(x, y, 1);
      px[2] = image.at(x, y, 2);
      px[3] = static_cast<float>(std::abs(dx));
      px[4] = static_cast<float>(std::abs(dy));
      px[5] = static_cast<float>(std::sqrt(dx * dx + dy * dy));
      px[6] = static_cast<float>(mean);
      px[7] = static_cast<float>(std::sqrt(var));
    }
  }
  return out;
}

std::vector<PointSample> sample_point_features(const FeatureMap& map, std::span<const Vec3> points,
                                               const CameraView& camera, const VisibilityMask& visibility) {
  if (visibility.visible.size() != points.size()) {
    throw PreconditionError("visibility mask does not match the point count");
  }
  std::vector<PointSample> samples;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!visibility.visible[i]) continue;
    const Projection p = project(points[i], camera);
    const Eigen::Vector2d uv(std::clamp(p.pixel.x(), 0.0, static_cast<double>(map.width() - 1)),
                             std::clamp(p.pixel.y(), 0.0, static_cast<double>(map.height() - 1)));
    samples.push_back({i, bilinear_sample(map, uv)});
  }
  return samples;
}

}  // namespace npbg
