// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "npbg/scene.hpp"

namespace npbg {

// Piecewise Gaussian in the triangulation angle theta (degrees) between the
// rays from a point to the two camera centers:
//   exp(-(theta - theta0)^2 / (2 sigma1^2))  for theta <= theta0
//   exp(-(theta - theta0)^2 / (2 sigma2^2))  otherwise
struct ViewScoreParams {
  double theta0 = 5.0;
  double sigma1 = 1.0;
  double sigma2 = 10.0;
  int visibility_reduce = 0;
};

struct ViewScore {
  std::size_t view = 0;
  double score = 0.0;
};

double point_score(double theta_degrees, const ViewScoreParams& params = {});

// Angle in degrees between (a - point) and (b - point).
double triangulation_angle(const Vec3& point, const Vec3& a, const Vec3& b);

// Per-view sum of point scores over the points in `active` that the view
// sees. active and every mask in view_visibility have one entry per point.
std::vector<ViewScore> score_views(std::span<const CameraView> views, const CameraView& target,
                                   const PointCloud& cloud, std::span<const std::uint8_t> active,
                                   std::span<const std::vector<std::uint8_t>> view_visibility,
                                   const ViewScoreParams& params = {});

// Draws k distinct views one at a time from the multinomial given by the
// normalized scores. After each draw the points seen by both the target and
// the chosen view are removed and the scores recomputed. A zero total falls
// back to a uniform draw over the remaining views (with a warning).
// Deterministic for a given seed.
std::vector<std::size_t> select_views(std::span<const CameraView> views, const CameraView& target,
                                      const PointCloud& cloud, std::size_t k, std::uint64_t seed,
                                      const ViewScoreParams& params = {});

}  // namespace npbg
