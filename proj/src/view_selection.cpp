// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/view_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "npbg/error.hpp"
#include "npbg/geometry.hpp"

namespace npbg {
namespace {

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double point_score(double theta, const ViewScoreParams& params) {
  const double d = theta - params.theta0;
  const double sigma = theta <= params.theta0 ? params.sigma1 : params.sigma2;
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

double triangulation_angle(const Vec3& point, const Vec3& a, const Vec3& b) {
  const Vec3 da = a - point;
  const Vec3 db = b - point;
  const double na = da.norm();
  const double nb = db.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return 0.0;
  // atan2 form stays accurate for small angles.
  const double angle = std::atan2(da.cross(db).norm(), da.dot(db));
  return angle * 180.0 / std::numbers::pi;
}

std::vector<ViewScore> score_views(std::span<const CameraView> views, const CameraView& target,
                                   const PointCloud& cloud, std::span<const std::uint8_t> active,
                                   std::span<const std::vector<std::uint8_t>> view_visibility,
                                   const ViewScoreParams& params) {
  if (active.size() != cloud.size() || view_visibility.size() != views.size()) {
    throw PreconditionError("score_views: mask sizes do not match");
  }
  const Vec3 target_center = target.center();
  std::vector<ViewScore> scores;
  scores.reserve(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    const Vec3 center = views[v].center();
    double total = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!active[i] || !view_visibility[v][i]) continue;
      total += point_score(triangulation_angle(cloud.positions[i], target_center, center), params);
    }
    scores.push_back({v, total});
  }
  return scores;
}

std::vector<std::size_t> select_views(std::span<const CameraView> views, const CameraView& target,
                                      const PointCloud& cloud, std::size_t k, std::uint64_t seed,
                                      const ViewScoreParams& params) {
  if (k > views.size()) {
    throw PreconditionError("cannot select " + std::to_string(k) + " views out of " + std::to_string(views.size()));
  }
  std::vector<std::uint8_t> active = estimate_visibility(cloud, target, params.visibility_reduce).visible;
  std::vector<std::vector<std::uint8_t>> visibility;
  visibility.reserve(views.size());
  for (const CameraView& view : views) {
    visibility.push_back(estimate_visibility(cloud, view, params.visibility_reduce).visible);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> taken(views.size(), 0);
  std::vector<std::size_t> selected;
  while (selected.size() < k) {
    const auto scores = score_views(views, target, cloud, active, visibility, params);
    std::vector<double> weights(views.size(), 0.0);
    double total = 0.0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      if (taken[v]) continue;
      weights[v] = std::isfinite(scores[v].score) ? scores[v].score : 0.0;
      total += weights[v];
    }
    if (!(total > 0.0)) {
      log_warning("view selection: all remaining views score zero; sampling uniformly");
      total = 0.0;
      for (std::size_t v = 0; v < views.size(); ++v) {
        weights[v] = taken[v] ? 0.0 : 1.0;
        total += weights[v];
      }
    }
    const double u = uniform01(rng) * total;
    std::size_t pick = views.size();
    double cumulative = 0.0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      if (weights[v] <= 0.0) continue;
      cumulative += weights[v];
      pick = v;
      if (u < cumulative) break;
    }
    taken[pick] = 1;
    selected.push_back(pick);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (visibility[pick][i]) active[i] = 0;
    }
  }
  return selected;
}

}  // namespace npbg
