// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "npbg/geometry.hpp"
#include "npbg/image.hpp"
#include "npbg/scene.hpp"

namespace npbg {

// Dense per-pixel descriptors, same spatial size as the (aligned) image.
using FeatureMap = BasicImage<float>;

// Produces a dense c-channel descriptor map from an image. The camera is the
// one the image was taken with (after alignment); extractors are free to
// ignore it.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int channels() const = 0;
  virtual FeatureMap extract(const Image& image, const CameraView& camera) const = 0;
};

// Deterministic hand-built extractor. With L = (R + G + B) / 3 the channels
// are R, G, B, |Sobel_x L| / 8, |Sobel_y L| / 8, the magnitude of the
// normalized Sobel gradient, and the 5x5 local mean and standard deviation
// of L. Borders replicate edge pixels.
class ReferenceFeatureExtractor final : public FeatureExtractor {
 public:
  static constexpr int kChannels = 8;

  // Throws ConfigError unless channels == 8.
  explicit ReferenceFeatureExtractor(int channels = kChannels);

  int channels() const override { return kChannels; }
  FeatureMap extract(const Image& image, const CameraView& camera) const override;
  FeatureMap extract(const Image& image) const;
};

struct PointSample {
  std::size_t point = 0;
  Eigen::VectorXd feature;
};

// Bilinearly samples the map at every visible point's projection. uv is
// clamped to the pixel-center range, which only matters for projections in
// the last half pixel of the frustum.
std::vector<PointSample> sample_point_features(const FeatureMap& map, std::span<const Vec3> points,
                                               const CameraView& camera, const VisibilityMask& visibility);

}  // namespace npbg
