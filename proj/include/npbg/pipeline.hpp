// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include "npbg/aggregate.hpp"
#include "npbg/alignment.hpp"
#include "npbg/error.hpp"
#include "npbg/features.hpp"
#include "npbg/raster.hpp"
#include "npbg/refine.hpp"
#include "npbg/scene.hpp"

namespace npbg {

// No point was visible in any source view.
class EmptyModelError : public Error {
 public:
  using Error::Error;
};

// Fitted scene: alive points only, one descriptor per point.
struct SceneModel {
  PointCloud cloud;
  DescriptorField field;
  SceneConfig config;

  const Basis& basis() const { return *field.basis; }
};

struct FitOptions {
  // Defaults to ReferenceFeatureExtractor when null.
  const FeatureExtractor* extractor = nullptr;
  // Defaults to make_basis(config.basis_kind, config.basis_size) when null.
  std::shared_ptr<const Basis> basis;
  // > 1 splits the views across workers and merges their statistics.
  int threads = 1;
  SolvePolicy solve_policy = SolvePolicy::kPseudoInverseFallback;
};

struct FitReport {
  std::size_t views = 0;
  std::size_t samples = 0;
  std::size_t alive_points = 0;
  std::size_t fallback_solves = 0;
};

// Streams the views once, keeping only per-point sufficient statistics, and
// finalizes a descriptor for every point of the cloud (dead points zero).
DescriptorField fit_descriptors(const PointCloud& cloud, std::span<const CameraView> views,
                                const SceneConfig& config, const FitOptions& options = {},
                                FitReport* report = nullptr);

// fit_descriptors followed by dropping the points no view saw.
SceneModel fit(const PointCloud& cloud, std::span<const CameraView> views, const SceneConfig& config,
               const FitOptions& options = {}, FitReport* report = nullptr);

// Keeps alive points only.
SceneModel make_scene_model(const PointCloud& cloud, const DescriptorField& field, const SceneConfig& config);

struct RenderOptions {
  // Defaults to PyramidFusionRefiner with default_color_head when null.
  const Refiner* refiner = nullptr;
  Resampling unalign = Resampling::kBilinear;
  // When set, receives the canonical-orientation raster pyramid.
  RasterPyramid* pyramid_out = nullptr;
};

// Aligns the target camera, evaluates y(v) per visible point, rasterizes the
// pyramid, refines and rotates back. Thread-safe for a shared model.
Image render(const SceneModel& model, const CameraView& camera, const RenderOptions& options = {});

// Model file: NPBD descriptor container followed by an "NPBS" section with
// the point positions, optional colors and the scene config.
void save_scene_model(const SceneModel& model, const std::filesystem::path& path);
SceneModel load_scene_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_scene_model(const SceneModel& model);
SceneModel deserialize_scene_model(std::span<const std::uint8_t> bytes);

}  // namespace npbg
