// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "npbg/image.hpp"
#include "npbg/raster.hpp"

namespace npbg {

// Linear c -> RGB head applied per pixel after hole filling.
struct RefinerConfig {
  Eigen::MatrixXd color_head;  // 3 x c
  Eigen::Vector3d color_bias = Eigen::Vector3d::Zero();
  int fill_iterations = 64;
};

// Identity on descriptor channels 0..2, zero elsewhere, zero bias.
RefinerConfig default_color_head(int channels, bool cloud_colors_available = true);

// Turns a raster pyramid into the final image.
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual Image refine(const RasterPyramid& pyramid) const = 0;
};

// Deterministic coarse-to-fine fusion:
//  1. for t = T..2, nearest-upsample level t into the empty pixels of level
//     t-1 (occupancy propagates with it);
//  2. remaining level-1 holes take the mean of their occupied 3x3
//     neighbours, one ring per iteration, up to fill_iterations rings;
//  3. color head per pixel, clamped to [0,1]. Unfilled holes keep a zero
//     descriptor, so they show the head bias (black by default).
class PyramidFusionRefiner final : public Refiner {
 public:
  explicit PyramidFusionRefiner(RefinerConfig config);
  Image refine(const RasterPyramid& pyramid) const override;

  // Steps 1-2 only: the filled level-1 descriptors plus occupancy.
  BasicImage<float> fill(const RasterPyramid& pyramid) const;

  const RefinerConfig& config() const { return config_; }

 private:
  RefinerConfig config_;
};

}  // namespace npbg
