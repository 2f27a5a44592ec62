// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <thread>

#include "byte_io.hpp"
#include "npbg/geometry.hpp"

namespace npbg {
namespace {

constexpr std::array<std::uint8_t, 4> kSceneMagic{'N', 'P', 'B', 'S'};
constexpr std::uint32_t kSceneVersion = 1;

struct FitContext {
  const PointCloud& cloud;
  const SceneConfig& config;
  const FeatureExtractor& extractor;
  const Basis& basis;
};

// Adds one source view to the per-point statistics. Returns the number of
// samples taken.
std::size_t accumulate_view(const FitContext& ctx, const CameraView& view, std::vector<AggregationState>& states) {
  const Image image = camera_image(view);
  const AlignedCamera aligned = align_camera_or_identity(view, ctx.config.world_up);
  const Image canonical = warp_to_canonical(image, aligned);
  const FeatureMap features = ctx.extractor.extract(canonical, aligned.camera);
  if (features.width() != canonical.width() || features.height() != canonical.height()) {
    throw ConfigError("feature extractor changed the spatial size of the image");
  }
  if (features.channels() != ctx.config.descriptor_channels) {
    throw ConfigError("feature extractor emits " + std::to_string(features.channels()) + " channels, scene uses " +
                      std::to_string(ctx.config.descriptor_channels));
  }

  const std::span<const Vec3> points(ctx.cloud.positions);
  VisibilityMask visibility = estimate_visibility(points, aligned.camera, ctx.config.visibility_reduce);
  // The zero padding around a rotated image carries no observation.
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (visibility.visible[i] && !aligned.in_source(project(points[i], aligned.camera).pixel)) {
      visibility.visible[i] = 0;
    }
  }

  const Vec3 center = aligned.camera.center();
  const auto samples = sample_point_features(features, points, aligned.camera, visibility);
  for (const PointSample& s : samples) {
    const Vec3 v = view_direction(points[s.point], center);
    states[s.point].update(ctx.basis, v,
                           std::span<const double>(s.feature.data(), static_cast<std::size_t>(s.feature.size())));
  }
  return samples.size();
}

}  // namespace

DescriptorField fit_descriptors(const PointCloud& cloud, std::span<const CameraView> views,
                                const SceneConfig& config, const FitOptions& options, FitReport* report) {
  validate(config);
  validate(cloud);
  if (views.empty()) throw PreconditionError("fit needs at least one source view");
  if (cloud.size() == 0) throw PreconditionError("fit needs a non-empty point cloud");
  for (std::size_t i = 0; i < views.size(); ++i) {
    validate(views[i], static_cast<int>(i));
    if (!views[i].image && views[i].image_path.empty()) {
      throw PreconditionError("source view " + std::to_string(i) + " has no image");
    }
  }

  std::optional<ReferenceFeatureExtractor> reference;
  const FeatureExtractor* extractor = options.extractor;
  if (extractor == nullptr) {
    reference.emplace(config.descriptor_channels);
    extractor = &*reference;
  }
  const std::shared_ptr<const Basis> basis =
      options.basis ? options.basis : std::make_shared<const Basis>(make_basis(config.basis_kind, config.basis_size));
  const int m = basis->size();
  const int c = config.descriptor_channels;

  const FitContext ctx{cloud, config, *extractor, *basis};
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.threads)), 1,
                                                      views.size());
  std::vector<std::vector<AggregationState>> partial(workers);
  std::vector<std::size_t> sample_counts(workers, 0);
  std::vector<std::exception_ptr> errors(workers);

  auto run_worker = [&](std::size_t w) {
    try {
      partial[w].assign(cloud.size(), AggregationState(m, c));
      const std::size_t begin = views.size() * w / workers;
      const std::size_t end = views.size() * (w + 1) / workers;
      for (std::size_t i = begin; i < end; ++i) sample_counts[w] += accumulate_view(ctx, views[i], partial[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<AggregationState>& states = partial.front();
  for (std::size_t w = 1; w < workers; ++w) {
    for (std::size_t i = 0; i < cloud.size(); ++i) states[i].merge(partial[w][i]);
    partial[w].clear();
    partial[w].shrink_to_fit();
  }

  DescriptorField field = DescriptorField::zeros(cloud.size(), basis, c);
  std::size_t fallbacks = 0;
  std::size_t alive = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    bool fallback = false;
    const auto coeffs = states[i].finalize(config.alpha, options.solve_policy, static_cast<std::int64_t>(i), &fallback);
    if (!coeffs) continue;
    fallbacks += fallback ? 1 : 0;
    ++alive;
    field.alive[i] = 1;
    float* b0 = field.beta0.data() + i * c;
    float* b = field.beta.data() + i * m * c;
    for (int j = 0; j < c; ++j) b0[j] = static_cast<float>(coeffs->beta0[j]);
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < c; ++j) b[static_cast<std::size_t>(r) * c + j] = static_cast<float>(coeffs->beta(r, j));
    }
  }
  if (fallbacks > 0) {
    log_warning(std::to_string(fallbacks) + " points had a singular system and used the pseudo-inverse");
  }
  if (report != nullptr) {
    report->views = views.size();
    report->samples = 0;
    for (auto n : sample_counts) report->samples += n;
    report->alive_points = alive;
    report->fallback_solves = fallbacks;
  }
  if (alive == 0) throw EmptyModelError("no point was visible in any source view");
  return field;
}

SceneModel make_scene_model(const PointCloud& cloud, const DescriptorField& field, const SceneConfig& config) {
  if (field.num_points != cloud.size()) throw PreconditionError("descriptor field does not match the point cloud");
  SceneModel model;
  model.config = config;
  model.config.basis_kind = field.basis->kind();
  model.config.basis_size = field.m;
  model.config.descriptor_channels = field.c;
  const int m = field.m;
  const int c = field.c;
  std::size_t alive = static_cast<std::size_t>(std::ranges::count(field.alive, 1));
  model.field = DescriptorField::zeros(alive, field.basis, c);
  std::ranges::fill(model.field.alive, 1);
  model.cloud.positions.reserve(alive);
  std::size_t k = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!field.alive[i]) continue;
    model.cloud.positions.push_back(cloud.positions[i]);
    if (cloud.has_colors()) model.cloud.colors.push_back(cloud.colors[i]);
    std::ranges::copy(field.beta0_of(i), model.field.beta0.begin() + static_cast<std::ptrdiff_t>(k * c));
    std::ranges::copy(field.beta_of(i), model.field.beta.begin() + static_cast<std::ptrdiff_t>(k * m * c));
    ++k;
  }
  return model;
}

SceneModel fit(const PointCloud& cloud, std::span<const CameraView> views, const SceneConfig& config,
               const FitOptions& options, FitReport* report) {
  const DescriptorField field = fit_descriptors(cloud, views, config, options, report);
  return make_scene_model(cloud, field, config);
}

Image render(const SceneModel& model, const CameraView& camera, const RenderOptions& options) {
  validate(camera);
  const AlignedCamera aligned = align_camera_or_identity(camera, model.config.world_up);
  const CameraView& target = aligned.camera;
  const Vec3 center = target.center();
  const int c = model.field.c;

  // Only in-frustum points can reach any level; the subset keeps index order
  // so depth ties resolve exactly as over the full cloud.
  std::vector<Vec3> visible;
  PointDescriptors descriptors;
  descriptors.channels = c;
  for (std::size_t i = 0; i < model.cloud.size(); ++i) {
    const Vec3& p = model.cloud.positions[i];
    if (!model.field.alive[i] || !project(p, target).in_frustum) continue;
    const Vec3 delta = center - p;
    if (!(delta.norm() > 0.0)) continue;
    visible.push_back(p);
    const std::size_t at = descriptors.values.size();
    descriptors.values.resize(at + c);
    eval_descriptor(model.field.beta0_of(i), model.field.beta_of(i), model.basis(), view_direction(p, center),
                    std::span<float>(descriptors.values.data() + at, static_cast<std::size_t>(c)));
  }

  RasterPyramid pyramid = rasterize_pyramid(visible, descriptors, target, model.config.pyramid_levels);
  Image canonical;
  if (options.refiner != nullptr) {
    canonical = options.refiner->refine(pyramid);
  } else {
    canonical = PyramidFusionRefiner(default_color_head(c, model.cloud.has_colors())).refine(pyramid);
  }
  if (options.pyramid_out != nullptr) *options.pyramid_out = std::move(pyramid);
  return unalign_output(canonical, aligned, options.unalign);
}

std::vector<std::uint8_t> serialize_scene_model(const SceneModel& model) {
  if (model.cloud.size() != model.field.num_points) {
    throw PreconditionError("scene model cloud and descriptor field disagree on the point count");
  }
  std::vector<std::uint8_t> out = serialize_descriptor_field(model.field);
  detail::ByteWriter w(out);
  w.put_bytes(kSceneMagic);
  w.put(kSceneVersion);
  for (int i = 0; i < 3; ++i) w.put(model.config.world_up[i]);
  w.put(static_cast<std::uint32_t>(model.config.pyramid_levels));
  w.put(static_cast<std::uint32_t>(model.config.visibility_reduce));
  w.put(model.config.alpha);
  w.put(static_cast<std::uint64_t>(model.cloud.size()));
  for (const Vec3& p : model.cloud.positions) {
    for (int i = 0; i < 3; ++i) w.put(p[i]);
  }
  w.put(static_cast<std::uint8_t>(model.cloud.has_colors() ? 1 : 0));
  for (const auto& col : model.cloud.colors) {
    for (int i = 0; i < 3; ++i) w.put(col[i]);
  }
  return out;
}

SceneModel deserialize_scene_model(std::span<const std::uint8_t> bytes) {
  std::size_t used = 0;
  SceneModel model;
  model.field = deserialize_descriptor_field(bytes, &used);
  detail::ByteReader r(bytes.subspan(used), "scene section");
  const auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kSceneMagic.begin())) {
    throw FormatError("model file has no scene section (a bare descriptor field cannot be rendered)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kSceneVersion) throw FormatError("scene section: unsupported version " + std::to_string(version));
  SceneConfig& config = model.config;
  for (int i = 0; i < 3; ++i) config.world_up[i] = r.get<double>();
  config.pyramid_levels = static_cast<int>(r.get<std::uint32_t>());
  config.visibility_reduce = static_cast<int>(r.get<std::uint32_t>());
  config.alpha = r.get<double>();
  config.basis_kind = model.field.basis->kind();
  config.basis_size = model.field.m;
  config.descriptor_channels = model.field.c;
  const auto n = r.get<std::uint64_t>();
  if (n != model.field.num_points) throw FormatError("scene section point count does not match descriptor field");
  if (n > r.remaining() / 24) throw FormatError("scene section: truncated positions");
  model.cloud.positions.resize(n);
  for (auto& p : model.cloud.positions) {
    for (int i = 0; i < 3; ++i) p[i] = r.get<double>();
  }
  if (r.get<std::uint8_t>() != 0) {
    model.cloud.colors.resize(n);
    for (auto& col : model.cloud.colors) {
      for (int i = 0; i < 3; ++i) col[i] = r.get<float>();
    }
  }
  if (r.remaining() != 0) throw FormatError("scene section: trailing bytes");
  try {
    validate(config);
    validate(model.cloud);
  } catch (const Error& e) {
    throw FormatError(std::string("scene section: ") + e.what());
  }
  return model;
}

void save_scene_model(const SceneModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_scene_model(model));
}

SceneModel load_scene_model(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return deserialize_scene_model(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace npbg
