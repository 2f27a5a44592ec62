// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "http_client.hpp"
#include "npbg/alignment.hpp"
#include "npbg/pipeline.hpp"
#include "npbg/png_io.hpp"
#include "npbg/service.hpp"
#include "npbg/view_selection.hpp"
#include "test_support.hpp"

namespace {

using namespace npbg;
using namespace npbg::testing;
using Clock = std::chrono::steady_clock;

// Stand-in for alpha -> 0+: small enough that the ridge term is negligible
// next to H^T H, large enough that K < m instances stay well posed.
constexpr double kAlphaZeroPlus = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double coefficient_error(const Coefficients& got, const Coefficients& want) {
  return std::max(relative_error(got.beta, want.beta), relative_error(got.beta0, want.beta0));
}

Outcome online_equals_batch() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    const int c = std::uniform_int_distribution<int>(1, 8)(rng);
    const int k = std::uniform_int_distribution<int>(1, 64)(rng);
    const double alpha = trial % 2 == 0 ? kAlphaZeroPlus : 1.0;
    Eigen::MatrixXd h = Eigen::MatrixXd::NullaryExpr(k, m, [&] { return uniform(rng, -1, 1); });
    Eigen::MatrixXd y = Eigen::MatrixXd::NullaryExpr(k, c, [&] { return uniform(rng, -1, 1); });
    AggregationState state(m, c);
    for (int r = 0; r < k; ++r) {
      const Eigen::VectorXd hr = h.row(r).transpose();
      const Eigen::VectorXd yr = y.row(r).transpose();
      state.update(std::span<const double>(hr.data(), m), std::span<const double>(yr.data(), c));
    }
    worst = std::max(worst, coefficient_error(*state.finalize(alpha), dense_ridge(h, y, alpha)));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-9 && elapsed < 10.0,
          fmt("1000 instances, alpha in {%g, 1}, max rel err %.3g, %.2f s", kAlphaZeroPlus, worst, elapsed)};
}

Outcome permutation_invariance() {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int set = 0; set < 100; ++set) {
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    const int c = std::uniform_int_distribution<int>(1, 8)(rng);
    const int k = std::uniform_int_distribution<int>(1, 64)(rng);
    std::vector<Eigen::VectorXd> hs, ys;
    for (int r = 0; r < k; ++r) {
      hs.push_back(Eigen::VectorXd::NullaryExpr(m, [&] { return uniform(rng, -1, 1); }));
      ys.push_back(Eigen::VectorXd::NullaryExpr(c, [&] { return uniform(rng, -1, 1); }));
    }
    std::vector<int> order(k);
    for (int r = 0; r < k; ++r) order[r] = r;
    std::optional<Coefficients> reference;
    for (int shuffle = 0; shuffle <= 10; ++shuffle) {
      if (shuffle > 0) std::shuffle(order.begin(), order.end(), rng);
      AggregationState state(m, c);
      for (int r : order) {
        state.update(std::span<const double>(hs[r].data(), m), std::span<const double>(ys[r].data(), c));
      }
      const Coefficients got = *state.finalize(1.0);
      if (!reference) {
        reference = got;
      } else {
        worst = std::max(worst, coefficient_error(got, *reference));
      }
    }
  }
  return {worst <= 1e-9, fmt("100 sets x 10 shuffles, max rel diff %.3g", worst)};
}

Outcome constant_memory() {
  std::mt19937_64 rng(3);
  const int m = 6;
  const int c = 8;
  auto fill = [&](int k) {
    AggregationState state(m, c);
    const Basis basis = default_mlp_basis(m);
    for (int r = 0; r < k; ++r) {
      const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(c, [&] { return uniform(rng, 0, 1); });
      state.update(basis, random_unit(rng), std::span<const double>(y.data(), c));
    }
    return state.serialize().size();
  };
  const std::size_t small = fill(10);
  const std::size_t large = fill(10000);
  return {small == large && small == AggregationState::byte_size(m, c),
          fmt("K=10: %zu bytes, K=10000: %zu bytes", small, large)};
}

Outcome worked_example() {
  AggregationState state(1, 1);
  const double plus = 1.0;
  const double minus = -1.0;
  state.update(std::span<const double>(&plus, 1), std::span<const double>(&plus, 1));
  state.update(std::span<const double>(&minus, 1), std::span<const double>(&minus, 1));
  const Coefficients got = *state.finalize(1.0);
  const double beta0 = got.beta0[0];
  const double beta = got.beta(0, 0);
  const bool pass = beta0 == 0.0 && beta == 2.0 / 3.0;
  return {pass, fmt("beta0 = %.17g, beta = %.17g", beta0, beta)};
}

CameraView random_camera(std::mt19937_64& rng, int width, int height) {
  const Vec3 eye(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -6, -4));
  const Vec3 target(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), 0.0);
  CameraView cam = look_at_camera(eye, target, Vec3(0, -1, 0), width, height, uniform(rng, 30, 70));
  cam.cx += uniform(rng, -3, 3);
  cam.cy += uniform(rng, -3, 3);
  return cam;
}

// Random points around the origin, with some exact duplicates for depth ties.
std::vector<Vec3> random_points(std::mt19937_64& rng, int n, double extent) {
  std::vector<Vec3> points;
  for (int i = 0; i < n; ++i) {
    if (i > 4 && i % 7 == 0) {
      points.push_back(points[std::uniform_int_distribution<int>(0, i - 1)(rng)]);
    } else {
      points.emplace_back(uniform(rng, -extent, extent), uniform(rng, -extent, extent), uniform(rng, -extent, extent));
    }
  }
  return points;
}

Outcome rasterizer_oracle() {
  std::mt19937_64 rng(4);
  int mismatches = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const CameraView cam = random_camera(rng, 64 + trial, 48 + 2 * trial);
    const auto points = random_points(rng, 200, 2.0);
    PointDescriptors desc;
    desc.channels = 3;
    for (std::size_t i = 0; i < points.size() * 3; ++i) desc.values.push_back(static_cast<float>(uniform(rng, -1, 1)));
    const RasterPyramid got = rasterize_pyramid(points, desc, cam, 5);
    const RasterPyramid want = brute_force_pyramid(points, desc, cam, 5);
    for (int t = 0; t < 5; ++t) mismatches += got.levels[t] == want.levels[t] ? 0 : 1;
  }
  return {mismatches == 0, fmt("%d trials x 5 levels, %d mismatching levels", trials, mismatches)};
}

Outcome visibility_oracle() {
  std::mt19937_64 rng(5);
  int mismatches = 0;
  const int trials = 30;
  for (int trial = 0; trial < trials; ++trial) {
    const CameraView cam = random_camera(rng, 16 + trial % 5, 12 + trial % 3);
    const auto points = random_points(rng, 50, 1.5);
    for (int r = 0; r <= 2; ++r) {
      mismatches += estimate_visibility(points, cam, r).visible == brute_force_visibility(points, cam, r) ? 0 : 1;
    }
  }
  return {mismatches == 0, fmt("%d trials x r in {0,1,2}, %d mismatches", trials, mismatches)};
}

Outcome alignment_equivariance() {
  SyntheticSceneParams params;
  const Scene scene = make_synthetic_scene(params);
  const SceneModel model = fit(scene.cloud, scene.cameras, scene.config);
  RenderOptions options;
  options.unalign = Resampling::kNearest;
  int checks = 0;
  int failures = 0;
  for (const double roll : {0.0, 17.0, 40.0, 100.0, -151.0}) {
    const CameraView base = synthetic_camera(params, 33.0 + roll, roll);
    const Image reference = render(model, base, options);
    for (int k = 0; k < 4; ++k) {
      const Image rolled = render(model, rotate_camera_quarter_turns(base, k), options);
      failures += rolled == rotate_quarter_turns(reference, k) ? 0 : 1;
      ++checks;
    }
  }
  return {failures == 0, fmt("%d camera/quarter-turn pairs, %d not bit-exact", checks, failures)};
}

Outcome end_to_end_recovery() {
  const int m = 6;
  const int c = 8;
  const int views = 8;
  auto basis = std::make_shared<const Basis>(default_mlp_basis(m));
  const RecoveryFixture fx = make_recovery_fixture(views, 7, 0.25, m, c, 6);
  const InjectingExtractor extractor(fx.cloud.positions, basis, fx.truth);
  SceneConfig config;
  config.descriptor_channels = c;
  FitOptions options;
  options.extractor = &extractor;
  options.basis = basis;
  FitReport report;
  const DescriptorField field = fit_descriptors(fx.cloud, fx.views, config, options, &report);
  if (report.samples != fx.cloud.size() * views) {
    return {false, fmt("expected %zu samples, pipeline took %zu", fx.cloud.size() * views, report.samples)};
  }

  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (std::size_t i = 0; i < fx.cloud.size(); ++i) {
    Eigen::MatrixXd h(views, m);
    Eigen::MatrixXd y(views, c);
    for (int k = 0; k < views; ++k) {
      const Vec3 v = view_direction(fx.cloud.positions[i], fx.views[k].center());
      h.row(k) = basis->eval(v).transpose();
      y.row(k) = eval_descriptor(fx.truth[i], *basis, v).transpose();
    }
    const Coefficients oracle = dense_ridge(h, y, config.alpha);
    for (int probe = 0; probe < 20; ++probe) {
      Vec3 v = random_unit(rng);
      v.z() = std::abs(v.z());
      const Eigen::VectorXd want = eval_descriptor(oracle, *basis, v);
      std::vector<float> got(c);
      eval_descriptor(field.beta0_of(i), field.beta_of(i), *basis, v, got);
      for (int ch = 0; ch < c; ++ch) worst = std::max(worst, std::abs(static_cast<double>(got[ch]) - want[ch]));
    }
  }
  return {worst <= 1e-6, fmt("%zu points x %d views, 20 held-out directions each, max abs err %.3g",
                             fx.cloud.size(), views, worst)};
}

Outcome sh_sanity() {
  const Basis sh = Basis::spherical_harmonics(9);
  std::mt19937_64 rng(8);
  double y00_err = 0.0;
  double parity_err = 0.0;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(9, 9);
  const int samples = 1000000;
  for (int s = 0; s < samples; ++s) {
    const Vec3 v = random_unit(rng);
    const Eigen::VectorXd h = sh.eval(v);
    gram.noalias() += h * h.transpose();
    if (s < 10000) {
      const Eigen::VectorXd g = sh.eval(-v);
      y00_err = std::max(y00_err, std::abs(h[0] - 0.28209479));
      for (int j = 1; j < 4; ++j) parity_err = std::max(parity_err, std::abs(g[j] + h[j]));
      for (int j = 4; j < 9; ++j) parity_err = std::max(parity_err, std::abs(g[j] - h[j]));
    }
  }
  gram *= 4.0 * std::numbers::pi / samples;
  const double ortho_err = (gram - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff();
  return {y00_err <= 1e-7 && parity_err <= 1e-12 && ortho_err <= 0.01,
          fmt("|Y00 - 0.28209479| <= %.2g, parity err %.2g, Gram deviation %.4f (1e6 samples)", y00_err, parity_err,
              ortho_err)};
}

Outcome defaults_honored() {
  const SceneConfig defaults;
  const bool constants = defaults.descriptor_channels == 8 && defaults.basis_size == 6 &&
                         defaults.basis_kind == BasisKind::kMlp && defaults.pyramid_levels == 5 &&
                         defaults.alpha == 1.0 && defaults.visibility_reduce == 0;
  const auto start = Clock::now();
  const Scene scene = load_scene(std::filesystem::path(NPBG_DATA_DIR) / "synthetic" / "scene.json");
  const SceneModel model = fit(scene.cloud, scene.cameras, scene.config);
  const bool same_config = model.config.descriptor_channels == 8 && model.config.basis_size == 6 &&
                           model.config.pyramid_levels == 5 && model.config.alpha == 1.0 &&
                           model.config.visibility_reduce == 0 && scene.cameras.size() == 5;

  SyntheticSceneParams params;
  const CameraView novel = synthetic_camera(params, 36.0, 8.0);
  const Image image = render(model, novel);
  const double elapsed = seconds_since(start);

  // Compare on pixels whose ray hits geometry; the background has no
  // points, so any hole filling there is invented. The baseline paints every
  // such pixel with the mean true color.
  const Image truth = render_synthetic_ground_truth(novel, params);
  const Eigen::Vector3f bg = synthetic_background().cast<float>();
  std::vector<int> foreground;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int y = 0; y < truth.height(); ++y) {
    for (int x = 0; x < truth.width(); ++x) {
      const auto px = truth.pixel(x, y);
      if (px[0] == bg[0] && px[1] == bg[1] && px[2] == bg[2]) continue;
      foreground.push_back(y * truth.width() + x);
      mean += Eigen::Vector3d(px[0], px[1], px[2]);
    }
  }
  mean /= static_cast<double>(std::max<std::size_t>(foreground.size(), 1));
  double mse = 0.0;
  double baseline_mse = 0.0;
  bool in_range = true;
  for (const int p : foreground) {
    for (int ch = 0; ch < 3; ++ch) {
      const double got = image.data()[3 * p + ch];
      const double want = truth.data()[3 * p + ch];
      in_range = in_range && got >= 0.0 && got <= 1.0;
      mse += (got - want) * (got - want);
      baseline_mse += (mean[ch] - want) * (mean[ch] - want);
    }
  }
  const double psnr = 10.0 * std::log10(1.0 / std::max(mse / (3.0 * foreground.size()), 1e-12));
  const double baseline = 10.0 * std::log10(1.0 / std::max(baseline_mse / (3.0 * foreground.size()), 1e-12));
  const bool ok_image =
      image.width() == novel.width && image.height() == novel.height && in_range && psnr > baseline + 1.0;
  return {constants && same_config && ok_image && elapsed < 30.0,
          fmt("c=8 m=6 T=5 alpha=1 r=0, %zu views, %zu points alive, fit+render %.2f s, novel-view foreground "
              "PSNR %.1f dB (mean-color baseline %.1f dB)",
              scene.cameras.size(), model.cloud.size(), elapsed, psnr, baseline)};
}

Outcome view_selection_statistics() {
  // One point at the origin, the target on +x at distance 5, three views
  // whose rays make 5, 8 and 4 degrees with the target ray.
  const double deg = std::numbers::pi / 180.0;
  const double angles[3] = {5.0, 8.0, 4.0};
  const double azimuths[3] = {0.0, 120.0, 240.0};
  auto eye_at = [&](double theta, double phi) {
    return Vec3(5 * std::cos(theta * deg), 5 * std::sin(theta * deg) * std::cos(phi * deg),
                5 * std::sin(theta * deg) * std::sin(phi * deg));
  };
  PointCloud cloud;
  cloud.positions.push_back(Vec3::Zero());
  const CameraView target = look_at_camera(Vec3(5, 0, 0), Vec3::Zero(), Vec3::UnitZ(), 64, 48, 40);
  std::vector<CameraView> views;
  for (int i = 0; i < 3; ++i) {
    views.push_back(look_at_camera(eye_at(angles[i], azimuths[i]), Vec3::Zero(), Vec3::UnitZ(), 64, 48, 40));
  }
  // Hand-evaluated scores: s(5) = 1, s(8) = exp(-9 / 200), s(4) = exp(-1 / 2).
  const double w[3] = {1.0, std::exp(-9.0 / 200.0), std::exp(-0.5)};
  const double total = w[0] + w[1] + w[2];

  const int draws = 100000;
  int counts[3] = {0, 0, 0};
  for (int s = 0; s < draws; ++s) ++counts[select_views(views, target, cloud, 1, static_cast<std::uint64_t>(s))[0]];
  double chi2 = 0.0;
  double max_dev = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double expected = draws * w[i] / total;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
    max_dev = std::max(max_dev, std::abs(counts[i] / static_cast<double>(draws) - w[i] / total));
  }
  const double p = chi_square_sf_even(chi2, 2);
  return {max_dev < 0.01 && p > 0.01,
          fmt("expected (%.4f, %.4f, %.4f), observed (%.4f, %.4f, %.4f), chi2 %.3f, p %.3f", w[0] / total,
              w[1] / total, w[2] / total, counts[0] / double(draws), counts[1] / double(draws),
              counts[2] / double(draws), chi2, p)};
}

Outcome service_contract() {
  SyntheticSceneParams params;
  params.width = 96;
  params.height = 72;
  params.views = 3;
  params.sphere_points = 3000;
  params.plane_spacing = 0.06;
  const Scene scene = make_synthetic_scene(params);
  auto model = std::make_shared<const SceneModel>(fit(scene.cloud, scene.cameras, scene.config));
  RenderService service(model, {});
  service.start();

  std::ostringstream notes;
  bool pass = true;
  const CameraView cam = synthetic_camera(params, 20.0, 10.0);
  const nlohmann::json camera = nlohmann::json::parse(camera_to_json(cam));
  const auto reply = http_request(service.port(), boost::beast::http::verb::post, "/render",
                                  nlohmann::json{{"camera", camera}, {"width", 128}, {"height", 80}}.dump());
  if (reply.status != 200 || reply.content_type != "image/png") {
    pass = false;
    notes << "/render status " << reply.status << "; ";
  } else {
    const Image png = decode_png(std::span(reinterpret_cast<const std::uint8_t*>(reply.body.data()), reply.body.size()));
    pass = pass && png.width() == 128 && png.height() == 80;
    notes << "/render " << png.width() << "x" << png.height() << " PNG; ";
  }

  WsClient ws(service.port());
  const int n = 100;
  for (int seq = 0; seq < n; ++seq) {
    const CameraView c = synthetic_camera(params, 3.6 * seq, 0.0);
    ws.send(nlohmann::json{{"seq", 1000 + seq}, {"camera", nlohmann::json::parse(camera_to_json(c))}}.dump());
  }
  int in_order = 0;
  for (int seq = 0; seq < n; ++seq) {
    bool binary = false;
    const auto frame = ws.receive(&binary);
    if (!binary || frame.size() < 4) continue;
    const std::uint32_t got = frame[0] | frame[1] << 8 | frame[2] << 16 | static_cast<std::uint32_t>(frame[3]) << 24;
    const Image png = decode_png(std::span(frame).subspan(4));
    if (got == static_cast<std::uint32_t>(1000 + seq) && png.width() == params.width) ++in_order;
  }
  ws.close();
  service.stop();
  pass = pass && in_order == n;
  notes << "/stream " << in_order << "/" << n << " pipelined frames in seq order";
  return {pass, notes.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"online-equals-batch", online_equals_batch},
      {"permutation-invariance", permutation_invariance},
      {"constant-memory", constant_memory},
      {"worked-example", worked_example},
      {"rasterizer-oracle", rasterizer_oracle},
      {"visibility-oracle", visibility_oracle},
      {"alignment-equivariance", alignment_equivariance},
      {"end-to-end-recovery", end_to_end_recovery},
      {"sh-sanity", sh_sanity},
      {"defaults-honored", defaults_honored},
      {"view-selection-statistics", view_selection_statistics},
      {"service-contract", service_contract},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failed += outcome.pass ? 0 : 1;
    std::printf("%s %-26s %s\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
