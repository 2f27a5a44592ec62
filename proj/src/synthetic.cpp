// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>

#include <Eigen/Geometry>
#include <json.hpp>

#include "json_camera.hpp"
#include "npbg/alignment.hpp"
#include "npbg/error.hpp"
#include "npbg/ply.hpp"
#include "npbg/png_io.hpp"

namespace npbg {
namespace {

constexpr double kPi = std::numbers::pi;
const Vec3 kSphereCenter(0.0, 0.0, 0.5);
constexpr double kSphereRadius = 0.5;
const Vec3 kBackground(0.05, 0.05, 0.08);

Vec3 light_direction() { return Vec3(0.4, 0.3, 0.85).normalized(); }

Vec3 plane_albedo(const Vec3& p) {
  const int ix = static_cast<int>(std::floor(p.x() / 0.25));
  const int iy = static_cast<int>(std::floor(p.y() / 0.25));
  const bool light = ((ix + iy) & 1) == 0;
  const double ramp = 0.5 + 0.1 * p.x();
  return light ? Vec3(0.85, 0.8 * ramp + 0.35, 0.6) : Vec3(0.2, 0.3, 0.45 + 0.1 * p.y());
}

Vec3 sphere_albedo(const Vec3& p) {
  const Vec3 n = (p - kSphereCenter) / kSphereRadius;
  const double lon = std::atan2(n.y(), n.x());
  const double lat = std::asin(std::clamp(n.z(), -1.0, 1.0));
  const double band = 0.5 + 0.5 * std::cos(6.0 * lat);
  return Vec3(0.55 + 0.4 * std::cos(3.0 * lon), 0.55 + 0.4 * std::cos(3.0 * lon + 2.094),
              0.55 + 0.4 * std::cos(3.0 * lon + 4.189)) *
         (0.6 + 0.4 * band);
}

double diffuse(const Vec3& normal) { return 0.35 + 0.65 * std::max(0.0, normal.dot(light_direction())); }

Vec3 clamp01(const Vec3& c) { return c.cwiseMax(0.0).cwiseMin(1.0); }

Vec3 plane_color(const Vec3& p) { return clamp01(plane_albedo(p) * diffuse(Vec3::UnitZ())); }

Vec3 sphere_color(const Vec3& p, const std::optional<Vec3>& eye) {
  const Vec3 n = (p - kSphereCenter).normalized();
  Vec3 c = sphere_albedo(p) * diffuse(n);
  if (eye) {
    const Vec3 to_eye = (*eye - p).normalized();
    const Vec3 reflected = 2.0 * n.dot(light_direction()) * n - light_direction();
    c += Vec3::Constant(0.45 * std::pow(std::max(0.0, reflected.dot(to_eye)), 24.0));
  }
  return clamp01(c);
}

}  // namespace

CameraView look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                          double fov_y_degrees) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) throw PreconditionError("look_at: view direction parallel to up");
  right.normalize();
  const Vec3 down = forward.cross(right);
  CameraView cam;
  cam.width = width;
  cam.height = height;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -(cam.rotation * eye);
  cam.fy = 0.5 * height / std::tan(0.5 * fov_y_degrees * kPi / 180.0);
  cam.fx = cam.fy;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  return cam;
}

CameraView synthetic_camera(const SyntheticSceneParams& params, double azimuth_degrees, double roll_degrees) {
  const double az = azimuth_degrees * kPi / 180.0;
  const double el = params.elevation_degrees * kPi / 180.0;
  const Vec3 target(0.0, 0.0, 0.4);
  const Vec3 eye = target + params.orbit_radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                                       std::sin(el));
  CameraView cam = look_at_camera(eye, target, Vec3::UnitZ(), params.width, params.height, params.fov_y_degrees);
  if (roll_degrees != 0.0) {
    const double r = roll_degrees * kPi / 180.0;
    const Mat3 roll = Eigen::AngleAxisd(r, Vec3::UnitZ()).toRotationMatrix();
    cam.rotation = roll * cam.rotation;
    cam.translation = roll * cam.translation;
  }
  return cam;
}

Vec3 synthetic_background() { return kBackground; }

Image render_synthetic_ground_truth(const CameraView& camera, const SyntheticSceneParams& params) {
  Image image(camera.width, camera.height, 3);
  const Vec3 origin = camera.center();
  const Mat3 to_world = camera.rotation.transpose();
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 dir =
          (to_world * Vec3((x - camera.cx) / camera.fx, (y - camera.cy) / camera.fy, 1.0)).normalized();
      double best = std::numeric_limits<double>::infinity();
      Vec3 color = kBackground;

      const Vec3 oc = origin - kSphereCenter;
      const double b = oc.dot(dir);
      const double disc = b * b - (oc.squaredNorm() - kSphereRadius * kSphereRadius);
      if (disc >= 0.0) {
        const double s = -b - std::sqrt(disc);
        if (s > 0.0 && s < best) {
          best = s;
          color = sphere_color(origin + s * dir, origin);
        }
      }
      if (dir.z() < 0.0) {
        const double s = -origin.z() / dir.z();
        const Vec3 p = origin + s * dir;
        if (s > 0.0 && s < best && std::abs(p.x()) <= params.plane_half_extent &&
            std::abs(p.y()) <= params.plane_half_extent) {
          best = s;
          color = plane_color(p);
        }
      }
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = static_cast<float>(color[c]);
    }
  }
  return image;
}

Scene make_synthetic_scene(const SyntheticSceneParams& params) {
  Scene scene;
  PointCloud& cloud = scene.cloud;
  const int steps = static_cast<int>(std::floor(2.0 * params.plane_half_extent / params.plane_spacing)) + 1;
  for (int j = 0; j < steps; ++j) {
    for (int i = 0; i < steps; ++i) {
      const Vec3 p(-params.plane_half_extent + i * params.plane_spacing,
                   -params.plane_half_extent + j * params.plane_spacing, 0.0);
      // Skip the patch hidden under the sphere.
      if (std::hypot(p.x(), p.y()) < 0.05) continue;
      cloud.positions.push_back(p);
      cloud.colors.push_back(plane_color(p).cast<float>());
    }
  }
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < params.sphere_points; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / params.sphere_points;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = golden * k;
    const Vec3 p = kSphereCenter + kSphereRadius * Vec3(r * std::cos(phi), r * std::sin(phi), z);
    if (p.z() < 0.02) continue;
    cloud.positions.push_back(p);
    cloud.colors.push_back(sphere_color(p, std::nullopt).cast<float>());
  }

  for (int v = 0; v < params.views; ++v) {
    CameraView cam = synthetic_camera(params, 360.0 * v / params.views, v * params.roll_step_degrees);
    cam.image = std::make_shared<const Image>(render_synthetic_ground_truth(cam, params));
    scene.cameras.push_back(std::move(cam));
  }
  return scene;
}

void write_scene(const Scene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_ply(dir / "cloud.ply", scene.cloud);
  nlohmann::json j;
  j["point_cloud"] = "cloud.ply";
  j["world_up"] = {scene.config.world_up.x(), scene.config.world_up.y(), scene.config.world_up.z()};
  j["cameras"] = nlohmann::json::array();
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    CameraView cam = scene.cameras[i];
    const std::string name = "view_" + std::to_string(i) + ".png";
    if (cam.image) write_png(dir / name, *cam.image);
    nlohmann::json cj = detail::camera_to_json(cam);
    if (cam.image) cj["image"] = name;
    j["cameras"].push_back(cj);
  }
  std::ofstream out(dir / "scene.json");
  if (!out) throw IoError("cannot write '" + (dir / "scene.json").string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace npbg
