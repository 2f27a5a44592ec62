// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace npbg {

// Dense interleaved h x w x channels buffer, row-major, pixel (x, y) at
// index (y * width + x) * channels.
template <typename T>
class BasicImage {
 public:
  BasicImage() = default;
  BasicImage(int width, int height, int channels, T fill = T{})
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  const T& at(int x, int y, int c) const { return data_[index(x, y) + c]; }

  std::span<T> pixel(int x, int y) { return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)}; }
  std::span<const T> pixel(int x, int y) const {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const BasicImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

// Color images are 3-channel floats in [0,1].
using Image = BasicImage<float>;

// Rotates an image by k quarter turns. One quarter turn maps source pixel
// (x, y) of a w x h image to (h - 1 - y, x) of the h x w result, which is
// the pixel motion produced by rolling the camera +90 degrees about its
// optical axis (see rotate_camera_quarter_turns). k may be negative.
template <typename T>
BasicImage<T> rotate_quarter_turns(const BasicImage<T>& src, int k);

extern template BasicImage<float> rotate_quarter_turns(const BasicImage<float>&, int);
extern template BasicImage<double> rotate_quarter_turns(const BasicImage<double>&, int);

}  // namespace npbg
