// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "npbg/error.hpp"
#include "npbg/features.hpp"
#include "npbg/geometry.hpp"
#include "test_support.hpp"

using namespace npbg;
using namespace npbg::testing;

namespace {

Image random_image(int w, int h, std::mt19937_64& rng) {
  Image img(w, h, 3);
  for (float& v : img.data()) v = static_cast<float>(uniform(rng, 0, 1));
  return img;
}

CameraView front_camera(int w, int h) {
  CameraView cam;
  cam.width = w;
  cam.height = h;
  cam.fx = cam.fy = 40.0;
  cam.cx = 0.5 * (w - 1);
  cam.cy = 0.5 * (h - 1);
  cam.translation = Vec3(0, 0, 4);
  return cam;
}

}  // namespace

TEST_CASE("reference extractor: constant image") {
  const ReferenceFeatureExtractor fx;
  const FeatureMap map = fx.extract(Image(12, 9, 3, 0.5f));
  REQUIRE(map.channels() == 8);
  CHECK(map.width() == 12);
  CHECK(map.height() == 9);
  const std::vector<float> want = {0.5f, 0.5f, 0.5f, 0.0f, 0.0f, 0.0f, 0.5f, 0.0f};
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 12; ++x) {
      for (int ch = 0; ch < 8; ++ch) CHECK(map.at(x, y, ch) == doctest::Approx(want[ch]).epsilon(1e-6));
    }
  }
}

TEST_CASE("reference extractor: step edge against a Sobel oracle") {
  // Vertical edge between columns 4 and 5: L = 0 left, 1 right.
  Image img(10, 6, 3, 0.0f);
  for (int y = 0; y < 6; ++y) {
    for (int x = 5; x < 10; ++x) {
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = 1.0f;
    }
  }
  const FeatureMap map = ReferenceFeatureExtractor().extract(img);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 10; ++x) {
      // Sobel x sums 4 * (L(x+1) - L(x-1)); divided by 8.
      const double want = (x == 4 || x == 5) ? 0.5 : 0.0;
      CHECK(map.at(x, y, 3) == doctest::Approx(want));
      CHECK(map.at(x, y, 4) == doctest::Approx(0.0));
      CHECK(map.at(x, y, 5) == doctest::Approx(want));
    }
  }
  // 5x5 window centered on column 4 sees two bright columns.
  CHECK(map.at(4, 3, 6) == doctest::Approx(0.4));
  CHECK(map.at(4, 3, 7) == doctest::Approx(std::sqrt(0.24)));
}

TEST_CASE("reference extractor: configuration and input checks") {
  CHECK_THROWS_AS(ReferenceFeatureExtractor(7), ConfigError);
  CHECK_THROWS_AS(ReferenceFeatureExtractor(16), ConfigError);
  CHECK_THROWS_AS(ReferenceFeatureExtractor().extract(Image(4, 4, 1)), PreconditionError);
}

TEST_CASE("reference extractor: deterministic and translation equivariant") {
  std::mt19937_64 rng(61);
  const Image img = random_image(40, 30, rng);
  const ReferenceFeatureExtractor fx;
  const FeatureMap a = fx.extract(img);
  CHECK(a == fx.extract(img));
  CHECK(a == fx.extract(img, front_camera(40, 30)));

  // Shift by (3, 2); pixels at least 2 away from every border are unaffected
  // by edge replication.
  Image shifted(40, 30, 3);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      for (int ch = 0; ch < 3; ++ch) shifted.at(x, y, ch) = img.at(std::max(x - 3, 0), std::max(y - 2, 0), ch);
    }
  }
  const FeatureMap b = fx.extract(shifted);
  for (int y = 2; y < 28; ++y) {
    for (int x = 2; x < 38; ++x) {
      if (x - 3 < 2 || y - 2 < 2) continue;
      for (int ch = 0; ch < 8; ++ch) CHECK(b.at(x, y, ch) == a.at(x - 3, y - 2, ch));
    }
  }
}

TEST_CASE("sample_point_features: empty, integer pixels, composition") {
  const CameraView cam = front_camera(32, 24);
  std::mt19937_64 rng(62);
  FeatureMap map(32, 24, 8);
  for (float& v : map.data()) v = static_cast<float>(uniform(rng, -1, 1));

  VisibilityMask none;
  CHECK(sample_point_features(map, {}, cam, none).empty());

  // A point projecting exactly onto pixel (10, 7).
  const double z = 4.0;
  const Vec3 on_pixel((10 - cam.cx) * z / cam.fx, (7 - cam.cy) * z / cam.fy, 0.0);
  const std::vector<Vec3> one = {on_pixel};
  const auto s = sample_point_features(map, one, cam, estimate_visibility(one, cam, 0));
  REQUIRE(s.size() == 1);
  for (int ch = 0; ch < 8; ++ch) CHECK(s[0].feature[ch] == map.at(10, 7, ch));

  std::vector<Vec3> points;
  for (int i = 0; i < 300; ++i) points.emplace_back(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -1, 1));
  const VisibilityMask vis = estimate_visibility(points, cam, 0);
  const auto samples = sample_point_features(map, points, cam, vis);
  CHECK(samples.size() == vis.count());
  for (const PointSample& p : samples) {
    REQUIRE(vis.visible[p.point]);
    const Projection pr = project(points[p.point], cam);
    const Eigen::Vector2d uv(std::min(pr.pixel.x(), 31.0), std::min(pr.pixel.y(), 23.0));
    CHECK((p.feature - bilinear_sample(map, uv)).cwiseAbs().maxCoeff() == 0.0);
  }

  VisibilityMask wrong;
  wrong.visible.resize(3);
  CHECK_THROWS_AS(sample_point_features(map, points, cam, wrong), PreconditionError);
}
