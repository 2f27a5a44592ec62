// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/alignment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>

#include "npbg/error.hpp"

namespace npbg {
namespace {

constexpr double kDegenerateSin = 1e-6;
// Residual rolls below this are treated as exactly zero so that aligned
// cameras of already-canonical views are bit-identical to the input.
constexpr double kZeroRoll = 1e-12;

struct RollSplit {
  int quarter_turns = 0;
  double residual = 0.0;
};

// (a, b) is the up direction in camera x/y. The canonical sector is
// b < 0, b <= a < -b; rotating the camera by +90 degrees maps (a, b) to
// (-b, a), so undoing one turn maps (a, b) to (b, -a). Both are exact.
RollSplit split_roll(const CameraView& camera, const Vec3& world_up) {
  const Vec3 d = camera.rotation * world_up;
  double a = d.x();
  double b = d.y();
  if (std::hypot(a, b) < kDegenerateSin * d.norm()) {
    throw DegenerateOrientationError("optical axis is parallel to the world up axis; canonical roll is undefined");
  }
  int q = 0;
  while (!(b < 0.0 && b <= a && a < -b)) {
    const double na = b;
    const double nb = -a;
    a = na;
    b = nb;
    ++q;
  }
  // Roll psi about z brings (a, b) onto the -y axis: tan(psi) = a / b.
  double residual = -std::atan2(-a, -b);
  if (std::abs(residual) < kZeroRoll) residual = 0.0;
  return {q, residual};
}

Mat3 roll_matrix(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

double wrap_angle(double phi) {
  while (phi <= -std::numbers::pi) phi += 2.0 * std::numbers::pi;
  while (phi > std::numbers::pi) phi -= 2.0 * std::numbers::pi;
  return phi;
}

CameraView rotate_once(const CameraView& in) {
  CameraView out = in;
  out.width = in.height;
  out.height = in.width;
  out.fx = in.fy;
  out.fy = in.fx;
  out.cx = (in.height - 1) - in.cy;
  out.cy = in.cx;
  for (int col = 0; col < 3; ++col) {
    out.rotation(0, col) = -in.rotation(1, col);
    out.rotation(1, col) = in.rotation(0, col);
  }
  out.translation = Vec3(-in.translation.y(), in.translation.x(), in.translation.z());
  if (in.image) out.image = std::make_shared<const Image>(rotate_quarter_turns(*in.image, 1));
  return out;
}

void sample_clamped(const Image& image, Eigen::Vector2d p, std::span<float> out) {
  p.x() = std::clamp(p.x(), 0.0, static_cast<double>(image.width() - 1));
  p.y() = std::clamp(p.y(), 0.0, static_cast<double>(image.height() - 1));
  const int x0 = static_cast<int>(std::floor(p.x()));
  const int y0 = static_cast<int>(std::floor(p.y()));
  const int x1 = std::min(x0 + 1, image.width() - 1);
  const int y1 = std::min(y0 + 1, image.height() - 1);
  const double fx = p.x() - x0;
  const double fy = p.y() - y0;
  for (int c = 0; c < image.channels(); ++c) {
    const double top = (1.0 - fx) * image.at(x0, y0, c) + fx * image.at(x1, y0, c);
    const double bottom = (1.0 - fx) * image.at(x0, y1, c) + fx * image.at(x1, y1, c);
    out[c] = static_cast<float>((1.0 - fy) * top + fy * bottom);
  }
}

bool inside_support(const Eigen::Vector2d& p, int width, int height) {
  return p.x() >= -0.5 && p.y() >= -0.5 && p.x() <= width - 0.5 && p.y() <= height - 0.5;
}

}  // namespace

Eigen::Vector2d AlignedCamera::to_canonical(const Eigen::Vector2d& p) const { return linear * p + offset; }

Eigen::Vector2d AlignedCamera::from_canonical(const Eigen::Vector2d& p) const {
  return linear.inverse() * (p - offset);
}

bool AlignedCamera::in_source(const Eigen::Vector2d& canonical_pixel) const {
  const Eigen::Vector2d p = residual_roll == 0.0 ? canonical_pixel : from_canonical(canonical_pixel);
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < intermediate.width && p.y() < intermediate.height;
}

double canonical_roll(const CameraView& camera, const Vec3& world_up) {
  const RollSplit split = split_roll(camera, world_up);
  return wrap_angle(split.quarter_turns * (std::numbers::pi / 2.0) + split.residual);
}

CameraView rotate_camera_quarter_turns(const CameraView& camera, int k) {
  k = ((k % 4) + 4) % 4;
  CameraView out = camera;
  for (int i = 0; i < k; ++i) out = rotate_once(out);
  return out;
}

AlignedCamera identity_alignment(const CameraView& camera) {
  AlignedCamera a;
  a.camera = camera;
  a.camera.image.reset();
  a.camera.image_path.clear();
  a.intermediate = a.camera;
  a.original_width = camera.width;
  a.original_height = camera.height;
  return a;
}

AlignedCamera align_camera(const CameraView& camera, const Vec3& world_up) {
  const RollSplit split = split_roll(camera, world_up);
  AlignedCamera a;
  a.original_width = camera.width;
  a.original_height = camera.height;
  a.quarter_turns = split.quarter_turns;
  a.residual_roll = split.residual;
  a.roll_angle = wrap_angle(split.quarter_turns * (std::numbers::pi / 2.0) + split.residual);

  CameraView base = camera;
  base.image.reset();
  base.image_path.clear();
  a.intermediate = rotate_camera_quarter_turns(base, 4 - split.quarter_turns);
  a.camera = a.intermediate;
  if (split.residual == 0.0) return a;

  const CameraView& in = a.intermediate;
  const double psi = -split.residual;
  const Mat3 roll = roll_matrix(psi);
  const Eigen::Matrix2d rot2 = roll.topLeftCorner<2, 2>();
  const Eigen::Matrix2d scale = Eigen::Vector2d(in.fx, in.fy).asDiagonal();
  const Eigen::Matrix2d inv_scale = Eigen::Vector2d(1.0 / in.fx, 1.0 / in.fy).asDiagonal();
  const Eigen::Vector2d principal(in.cx, in.cy);
  a.linear = scale * rot2 * inv_scale;

  // Canvas: bounding box of the rotated pixel footprints before padding.
  const std::array<Eigen::Vector2d, 4> corners{
      Eigen::Vector2d(-0.5, -0.5), Eigen::Vector2d(in.width - 0.5, -0.5),
      Eigen::Vector2d(-0.5, in.height - 0.5), Eigen::Vector2d(in.width - 0.5, in.height - 0.5)};
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (const auto& c : corners) {
    const Eigen::Vector2d p = a.linear * (c - principal) + principal;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  a.pad_offsets = Eigen::Vector2d(-0.5, -0.5) - lo;
  a.offset = principal + a.pad_offsets - a.linear * principal;

  CameraView& out = a.camera;
  out.width = static_cast<int>(std::ceil(hi.x() - lo.x() - 1e-9));
  out.height = static_cast<int>(std::ceil(hi.y() - lo.y() - 1e-9));
  out.cx = in.cx + a.pad_offsets.x();
  out.cy = in.cy + a.pad_offsets.y();
  out.rotation = roll * in.rotation;
  out.translation = roll * in.translation;
  return a;
}

AlignedCamera align_camera_or_identity(const CameraView& camera, const Vec3& world_up) {
  try {
    return align_camera(camera, world_up);
  } catch (const DegenerateOrientationError& e) {
    log_warning(std::string(e.what()) + "; using roll 0");
    return identity_alignment(camera);
  }
}

Image warp_to_canonical(const Image& image, const AlignedCamera& aligned) {
  if (image.width() != aligned.original_width || image.height() != aligned.original_height) {
    throw PreconditionError("warp_to_canonical: image does not match the camera size");
  }
  Image rotated = rotate_quarter_turns(image, -aligned.quarter_turns);
  if (aligned.residual_roll == 0.0) return rotated;

  const Eigen::Matrix2d inverse = aligned.linear.inverse();
  Image out(aligned.camera.width, aligned.camera.height, image.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const Eigen::Vector2d src = inverse * (Eigen::Vector2d(x, y) - aligned.offset);
      if (!inside_support(src, rotated.width(), rotated.height())) continue;
      sample_clamped(rotated, src, out.pixel(x, y));
    }
  }
  return out;
}

std::pair<Image, AlignedCamera> align_image(const Image& image, const CameraView& camera, const Vec3& world_up) {
  if (image.width() != camera.width || image.height() != camera.height) {
    throw PreconditionError("align_image: image does not match the camera size");
  }
  AlignedCamera aligned = align_camera(camera, world_up);
  Image out = warp_to_canonical(image, aligned);
  return {std::move(out), std::move(aligned)};
}

Image unalign_output(const Image& image, const AlignedCamera& aligned, Resampling resampling) {
  if (image.width() != aligned.camera.width || image.height() != aligned.camera.height) {
    throw PreconditionError("unalign_output: image does not match the aligned canvas");
  }
  if (aligned.residual_roll == 0.0) return rotate_quarter_turns(image, aligned.quarter_turns);

  Image restored(aligned.intermediate.width, aligned.intermediate.height, image.channels());
  for (int y = 0; y < restored.height(); ++y) {
    for (int x = 0; x < restored.width(); ++x) {
      const Eigen::Vector2d p = aligned.to_canonical(Eigen::Vector2d(x, y));
      if (resampling == Resampling::kNearest) {
        const int nx = std::clamp(static_cast<int>(std::lround(p.x())), 0, image.width() - 1);
        const int ny = std::clamp(static_cast<int>(std::lround(p.y())), 0, image.height() - 1);
        std::ranges::copy(image.pixel(nx, ny), restored.pixel(x, y).begin());
      } else {
        sample_clamped(image, p, restored.pixel(x, y));
      }
    }
  }
  return rotate_quarter_turns(restored, aligned.quarter_turns);
}

}  // namespace npbg
