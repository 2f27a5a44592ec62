// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <iostream>
#include <sstream>

#include "npbg/error.hpp"
#include "npbg/pipeline.hpp"
#include "npbg/synthetic.hpp"
#include "test_support.hpp"

using namespace npbg;
using namespace npbg::testing;

namespace {

// Captures std::cerr for the lifetime of the object.
class CerrCapture {
 public:
  CerrCapture() : old_(std::cerr.rdbuf(buffer_.rdbuf())) {}
  ~CerrCapture() { std::cerr.rdbuf(old_); }
  std::string text() const { return buffer_.str(); }

 private:
  std::ostringstream buffer_;
  std::streambuf* old_;
};

const Scene& small_scene() {
  static const Scene scene = [] {
    SyntheticSceneParams p;
    p.width = 64;
    p.height = 48;
    p.views = 6;
    p.plane_spacing = 0.08;
    p.sphere_points = 2000;
    return make_synthetic_scene(p);
  }();
  return scene;
}

double max_field_diff(const DescriptorField& a, const DescriptorField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.beta0.size(); ++i) d = std::max(d, double(std::abs(a.beta0[i] - b.beta0[i])));
  for (std::size_t i = 0; i < a.beta.size(); ++i) d = std::max(d, double(std::abs(a.beta[i] - b.beta[i])));
  return d;
}

}  // namespace

TEST_CASE("fit: one view, one point gives the sampled feature and zero beta") {
  PointCloud cloud;
  cloud.positions = {Vec3(0.1, -0.2, 0.3)};
  CameraView cam = look_at_camera(Vec3(4, 0, 0.5), Vec3::Zero(), Vec3::UnitZ(), 32, 24, 40);
  cam.image = std::make_shared<const Image>(32, 24, 3, 0.25f);
  SceneConfig config;
  config.basis_kind = BasisKind::kSphericalHarmonics;
  config.basis_size = 4;
  FitReport report;
  const std::vector<CameraView> views = {cam};
  const SceneModel model = fit(cloud, views, config, {}, &report);
  CHECK(report.samples == 1);
  CHECK(report.alive_points == 1);
  const std::vector<float> want = {0.25f, 0.25f, 0.25f, 0, 0, 0, 0.25f, 0};
  for (int ch = 0; ch < 8; ++ch) CHECK(model.field.beta0_of(0)[ch] == doctest::Approx(want[ch]).epsilon(1e-6));
  for (float b : model.field.beta_of(0)) CHECK(b == 0.0f);

  // Rendering from the same camera: the point's pixel shows head(beta0).
  RasterPyramid pyramid;
  RenderOptions options;
  options.pyramid_out = &pyramid;
  const Image out = render(model, cam, options);
  const Projection p = project(cloud.positions[0], cam);
  const int x = static_cast<int>(p.pixel.x());
  const int y = static_cast<int>(p.pixel.y());
  for (int ch = 0; ch < 3; ++ch) CHECK(out.at(x, y, ch) == doctest::Approx(0.25f));
  CHECK(pyramid.occupied_count(0) == 1);
}

TEST_CASE("fit: errors") {
  const Scene& scene = small_scene();
  CHECK_THROWS_AS(fit(scene.cloud, {}, scene.config), PreconditionError);
  CHECK_THROWS_AS(fit(PointCloud{}, scene.cameras, scene.config), PreconditionError);

  // Every point behind the camera.
  PointCloud behind;
  behind.positions = {Vec3(10, 0, 0), Vec3(11, 0, 0)};
  CameraView cam = look_at_camera(Vec3(4, 0, 0.5), Vec3::Zero(), Vec3::UnitZ(), 32, 24, 40);
  cam.image = std::make_shared<const Image>(32, 24, 3, 0.25f);
  const std::vector<CameraView> views = {cam};
  CHECK_THROWS_AS(fit(behind, views, scene.config), EmptyModelError);

  CameraView no_image = cam;
  no_image.image.reset();
  const std::vector<CameraView> bad = {no_image};
  CHECK_THROWS_AS(fit(scene.cloud, bad, scene.config), PreconditionError);
}

TEST_CASE("fit: view order and thread count do not change the result") {
  const Scene& scene = small_scene();
  FitReport report;
  const DescriptorField ref = fit_descriptors(scene.cloud, scene.cameras, scene.config, {}, &report);
  CHECK(report.views == scene.cameras.size());
  CHECK(report.alive_points > 0);

  std::vector<CameraView> shuffled = scene.cameras;
  std::mt19937_64 rng(81);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const DescriptorField a = fit_descriptors(scene.cloud, shuffled, scene.config);
  CHECK(a.alive == ref.alive);
  CHECK(max_field_diff(a, ref) < 1e-5);

  FitOptions threaded;
  threaded.threads = 3;
  const DescriptorField b = fit_descriptors(scene.cloud, scene.cameras, scene.config, threaded);
  CHECK(b.alive == ref.alive);
  CHECK(max_field_diff(b, ref) < 1e-5);
  CHECK(same_values(b, fit_descriptors(scene.cloud, scene.cameras, scene.config, threaded)));
}

TEST_CASE("render: empty model is black, output matches the camera size") {
  const Scene& scene = small_scene();
  SceneModel model = fit(scene.cloud, scene.cameras, scene.config);
  std::fill(model.field.alive.begin(), model.field.alive.end(), 0);
  std::fill(model.field.beta0.begin(), model.field.beta0.end(), 0.0f);
  std::fill(model.field.beta.begin(), model.field.beta.end(), 0.0f);
  CameraView target = synthetic_camera(SyntheticSceneParams{}, 33.0, 12.0);
  const Image out = render(model, target);
  CHECK(out == Image(target.width, target.height, 3, 0.0f));
}

TEST_CASE("render: quarter-turn rolls rotate the output exactly") {
  const Scene& scene = small_scene();
  const SceneModel model = fit(scene.cloud, scene.cameras, scene.config);
  SyntheticSceneParams p;
  p.width = 64;
  p.height = 48;
  const CameraView cam = synthetic_camera(p, 50.0, 10.0);
  const Image base = render(model, cam);
  for (int k = 1; k < 4; ++k) {
    CHECK(render(model, rotate_camera_quarter_turns(cam, k)) == rotate_quarter_turns(base, k));
  }
}

TEST_CASE("render: a camera looking straight down warns and still renders") {
  const Scene& scene = small_scene();
  const SceneModel model = fit(scene.cloud, scene.cameras, scene.config);
  const CameraView down = look_at_camera(Vec3(0, 0, 5), Vec3::Zero(), Vec3::UnitY(), 40, 30, 50);
  CerrCapture capture;
  const Image out = render(model, down);
  CHECK(out.width() == 40);
  CHECK(out.height() == 30);
  CHECK(contains(capture.text(), "warning"));
}

TEST_CASE("scene model: save and load round trip") {
  const Scene& scene = small_scene();
  const SceneModel model = fit(scene.cloud, scene.cameras, scene.config);
  TempDir dir;
  save_scene_model(model, dir / "model.npbd");
  const SceneModel back = load_scene_model(dir / "model.npbd");
  CHECK(same_values(back.field, model.field));
  CHECK(back.cloud.positions == model.cloud.positions);
  CHECK(back.config.pyramid_levels == model.config.pyramid_levels);
  CHECK(back.config.world_up == model.config.world_up);
  const CameraView cam = synthetic_camera(SyntheticSceneParams{}, 80.0, -20.0);
  CHECK(render(back, cam) == render(model, cam));

  // A bare descriptor field is not a renderable model.
  save_descriptor_field(model.field, dir / "bare.npbd");
  CHECK_THROWS_AS(load_scene_model(dir / "bare.npbd"), FormatError);
  CHECK_THROWS_AS(load_scene_model(dir / "missing.npbd"), IoError);
}
