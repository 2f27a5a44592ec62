// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>

#include <Eigen/Core>

#include "npbg/image.hpp"
#include "npbg/scene.hpp"

namespace npbg {

// Canonical orientation: the world up axis, projected onto the image plane,
// points toward -v (image top).
//
// A camera with roll angle phi relative to its canonical orientation has
// rotation Rz(phi) * R_canonical, Rz rotating about the optical axis
// (x_cam' = cos * x - sin * y, y_cam' = sin * x + cos * y). Alignment splits
// phi into q exact quarter turns and a residual in [-45, 45) degrees; the
// quarter turns are pixel permutations and the residual is resampled.
struct AlignedCamera {
  CameraView camera;        // canonical camera over the padded canvas
  double roll_angle = 0.0;  // phi in (-pi, pi]
  Eigen::Vector2d pad_offsets = Eigen::Vector2d::Zero();  // (left, top)
  int original_width = 0;
  int original_height = 0;

  int quarter_turns = 0;      // q in [0, 3]
  double residual_roll = 0.0;  // phi - q * pi / 2 (wrapped)
  CameraView intermediate;     // original rolled back by q quarter turns

  // Maps an intermediate-camera pixel to the canonical canvas.
  Eigen::Vector2d to_canonical(const Eigen::Vector2d& intermediate_pixel) const;
  Eigen::Vector2d from_canonical(const Eigen::Vector2d& canonical_pixel) const;

  // True iff a canonical-canvas pixel lies inside the original image rather
  // than in the zero padding.
  bool in_source(const Eigen::Vector2d& canonical_pixel) const;

  Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

// Roll angle phi of the camera relative to canonical. Throws
// DegenerateOrientationError when the optical axis is parallel to world_up
// (|sin| < 1e-6).
double canonical_roll(const CameraView& camera, const Vec3& world_up);

// Rolls the camera by k * 90 degrees about its optical axis, adjusting
// intrinsics and image size so that the new image is
// rotate_quarter_turns(old image, k). Exact in floating point for the
// rotation; intrinsics use (h - 1) - cy style updates.
CameraView rotate_camera_quarter_turns(const CameraView& camera, int k);

AlignedCamera align_camera(const CameraView& camera, const Vec3& world_up);

// No-op alignment, used as fallback for degenerate orientations.
AlignedCamera identity_alignment(const CameraView& camera);

// align_camera, or identity_alignment plus a logged warning when the
// orientation is degenerate.
AlignedCamera align_camera_or_identity(const CameraView& camera, const Vec3& world_up);

// Rotates an image into the canonical orientation on a zero-padded canvas
// that keeps all original content.
Image warp_to_canonical(const Image& image, const AlignedCamera& aligned);

std::pair<Image, AlignedCamera> align_image(const Image& image, const CameraView& camera, const Vec3& world_up);

enum class Resampling { kBilinear, kNearest };

// Inverse of warp_to_canonical: canonical-canvas image back to the original
// size and orientation.
Image unalign_output(const Image& image, const AlignedCamera& aligned, Resampling resampling = Resampling::kBilinear);

}  // namespace npbg
