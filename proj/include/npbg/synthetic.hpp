// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "npbg/scene.hpp"

namespace npbg {

// Pinhole camera at eye looking at target, x right / y down, with the given
// vertical field of view. The principal point is the image center.
CameraView look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                          double fov_y_degrees);

// Analytic test scene: a striped glossy sphere resting on a checkered
// ground plane (world up +Z). Source images are ray-cast, so they are exact
// for the geometry the point cloud samples.
struct SyntheticSceneParams {
  int width = 160;
  int height = 120;
  int views = 5;
  double orbit_radius = 4.0;
  double elevation_degrees = 30.0;
  double fov_y_degrees = 50.0;
  double roll_step_degrees = 17.0;  // view i is rolled by i * step
  double plane_half_extent = 2.5;
  double plane_spacing = 0.03;
  int sphere_points = 12000;
};

// Camera on the orbit at the given azimuth, rolled about its optical axis.
CameraView synthetic_camera(const SyntheticSceneParams& params, double azimuth_degrees, double roll_degrees = 0.0);

// Color of pixels whose ray misses the scene.
Vec3 synthetic_background();

Image render_synthetic_ground_truth(const CameraView& camera, const SyntheticSceneParams& params = {});

Scene make_synthetic_scene(const SyntheticSceneParams& params = {});

// Writes scene.json, cloud.ply and view_<i>.png into dir.
void write_scene(const Scene& scene, const std::filesystem::path& dir);

}  // namespace npbg
