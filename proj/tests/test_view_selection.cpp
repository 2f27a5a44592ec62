// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include "npbg/error.hpp"
#include "npbg/synthetic.hpp"
#include "npbg/view_selection.hpp"
#include "test_support.hpp"

using namespace npbg;
using namespace npbg::testing;

namespace {

struct Rig {
  PointCloud cloud;
  std::vector<CameraView> views;
  CameraView target;
};

Rig make_rig(int views) {
  Rig rig;
  std::mt19937_64 rng(91);
  for (int i = 0; i < 400; ++i) rig.cloud.positions.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), 0.0);
  SyntheticSceneParams p;
  p.width = 64;
  p.height = 48;
  for (int v = 0; v < views; ++v) rig.views.push_back(synthetic_camera(p, 360.0 * v / views, 0.0));
  rig.target = synthetic_camera(p, 3.0, 0.0);
  return rig;
}

}  // namespace

TEST_CASE("point_score: reference values") {
  CHECK(point_score(5.0) == 1.0);
  CHECK(point_score(4.0) == doctest::Approx(std::exp(-0.5)));
  CHECK(point_score(15.0) == doctest::Approx(std::exp(-0.5)));
  CHECK(point_score(0.0) == doctest::Approx(std::exp(-12.5)));
  CHECK(point_score(25.0) == doctest::Approx(std::exp(-2.0)));
  // Steeper below the peak than above.
  CHECK(point_score(3.0) < point_score(7.0));
}

TEST_CASE("triangulation_angle: simple geometry") {
  CHECK(triangulation_angle(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(90.0));
  CHECK(triangulation_angle(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitX() * 3) == doctest::Approx(0.0));
  CHECK(triangulation_angle(Vec3::Zero(), Vec3::UnitX(), -Vec3::UnitX()) == doctest::Approx(180.0));
  CHECK(triangulation_angle(Vec3::Zero(), Vec3::Zero(), Vec3::UnitX()) == 0.0);
}

TEST_CASE("select_views: distinct, bounded, deterministic per seed") {
  const Rig rig = make_rig(8);
  for (std::size_t k = 0; k <= rig.views.size(); ++k) {
    const auto picks = select_views(rig.views, rig.target, rig.cloud, k, 7);
    CHECK(picks.size() == k);
    CHECK(std::set(picks.begin(), picks.end()).size() == k);
    for (std::size_t v : picks) CHECK(v < rig.views.size());
    CHECK(picks == select_views(rig.views, rig.target, rig.cloud, k, 7));
  }
  CHECK_THROWS_AS(select_views(rig.views, rig.target, rig.cloud, 9, 7), PreconditionError);

  std::set<std::vector<std::size_t>> distinct;
  for (std::uint64_t seed = 0; seed < 20; ++seed) distinct.insert(select_views(rig.views, rig.target, rig.cloud, 3, seed));
  CHECK(distinct.size() > 1);
}

TEST_CASE("select_views: the closest view dominates the first draw") {
  const Rig rig = make_rig(8);
  int first_is_zero = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    if (select_views(rig.views, rig.target, rig.cloud, 1, seed)[0] == 0) ++first_is_zero;
  }
  // View 0 sits 3 degrees of azimuth away, the others at least 42; a
  // uniform draw would pick it 25 times.
  CHECK(first_is_zero > 100);
}

TEST_CASE("select_views: zero scores fall back to a uniform draw with a warning") {
  Rig rig = make_rig(4);
  rig.cloud.positions = {Vec3(100, 100, 100)};  // seen by nobody
  std::ostringstream sink;
  std::streambuf* old = std::cerr.rdbuf(sink.rdbuf());
  const auto picks = select_views(rig.views, rig.target, rig.cloud, 4, 3);
  std::cerr.rdbuf(old);
  CHECK(std::set(picks.begin(), picks.end()).size() == 4);
  CHECK(contains(sink.str(), "uniformly"));
}

TEST_CASE("score_views: sums point scores over shared points") {
  const Rig rig = make_rig(4);
  const std::size_t n = rig.cloud.size();
  std::vector<std::uint8_t> active(n, 1);
  std::vector<std::vector<std::uint8_t>> vis(rig.views.size(), std::vector<std::uint8_t>(n, 0));
  vis[1][0] = vis[1][5] = 1;
  const auto scores = score_views(rig.views, rig.target, rig.cloud, active, vis);
  REQUIRE(scores.size() == 4);
  CHECK(scores[0].score == 0.0);
  double want = 0.0;
  for (std::size_t i : {0, 5}) {
    want += point_score(triangulation_angle(rig.cloud.positions[i], rig.target.center(), rig.views[1].center()));
  }
  CHECK(scores[1].score == doctest::Approx(want));
  active[5] = 0;
  CHECK(score_views(rig.views, rig.target, rig.cloud, active, vis)[1].score < want);
  CHECK_THROWS_AS(score_views(rig.views, rig.target, rig.cloud, std::vector<std::uint8_t>(3), vis), PreconditionError);
}
