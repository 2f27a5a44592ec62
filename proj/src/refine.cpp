// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "npbg/error.hpp"

namespace npbg {

RefinerConfig default_color_head(int channels, bool) {
  if (channels < 1) throw ConfigError("color head needs at least one descriptor channel");
  RefinerConfig config;
  config.color_head = Eigen::MatrixXd::Zero(3, channels);
  for (int i = 0; i < std::min(3, channels); ++i) config.color_head(i, i) = 1.0;
  return config;
}

PyramidFusionRefiner::PyramidFusionRefiner(RefinerConfig config) : config_(std::move(config)) {
  if (config_.color_head.rows() != 3 || config_.color_head.cols() < 1) {
    throw ConfigError("color head must be 3 x c");
  }
  if (config_.fill_iterations < 0) throw ConfigError("fill_iterations must be >= 0");
}

BasicImage<float> PyramidFusionRefiner::fill(const RasterPyramid& pyramid) const {
  if (pyramid.levels.empty()) throw PreconditionError("empty raster pyramid");
  const int c = pyramid.descriptor_channels;
  std::vector<BasicImage<float>> levels = pyramid.levels;

  for (std::size_t t = levels.size() - 1; t >= 1; --t) {
    const BasicImage<float>& coarse = levels[t];
    BasicImage<float>& fine = levels[t - 1];
    for (int y = 0; y < fine.height(); ++y) {
      for (int x = 0; x < fine.width(); ++x) {
        if (fine.at(x, y, c) != 0.0f) continue;
        const int cx = x / 2;
        const int cy = y / 2;
        if (cx >= coarse.width() || cy >= coarse.height() || coarse.at(cx, cy, c) == 0.0f) continue;
        std::ranges::copy(coarse.pixel(cx, cy), fine.pixel(x, y).begin());
      }
    }
  }

  BasicImage<float> out = std::move(levels.front());
  const int w = out.width();
  const int h = out.height();
  auto occupied = [&](int x, int y) { return out.at(x, y, c) != 0.0f; };

  // Frontier-driven Jacobi rings: a hole is processed in iteration k only if
  // some neighbour became occupied in iteration k-1 (or was occupied
  // initially), which yields the same result as scanning every hole.
  std::vector<std::uint8_t> queued(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> candidates;
  auto enqueue_neighbours = [&](int x, int y) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || occupied(nx, ny)) continue;
        auto& q = queued[static_cast<std::size_t>(ny) * w + nx];
        if (!q) {
          q = 1;
          candidates.emplace_back(nx, ny);
        }
      }
    }
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (occupied(x, y)) enqueue_neighbours(x, y);
    }
  }

  std::vector<float> filled;
  std::vector<double> acc(c);
  for (int iter = 0; iter < config_.fill_iterations && !candidates.empty(); ++iter) {
    // Sort for a scan-order independent of how the frontier was discovered.
    std::ranges::sort(candidates, [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    filled.assign(candidates.size() * c, 0.0f);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const auto [x, y] = candidates[k];
      std::ranges::fill(acc, 0.0);
      int count = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || !occupied(nx, ny)) continue;
          const auto p = out.pixel(nx, ny);
          for (int ch = 0; ch < c; ++ch) acc[ch] += p[ch];
          ++count;
        }
      }
      for (int ch = 0; ch < c; ++ch) filled[k * c + ch] = static_cast<float>(acc[ch] / count);
    }
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const auto [x, y] = candidates[k];
      auto p = out.pixel(x, y);
      std::copy(filled.begin() + static_cast<std::ptrdiff_t>(k * c),
                filled.begin() + static_cast<std::ptrdiff_t>((k + 1) * c), p.begin());
      p[c] = 1.0f;
    }
    const auto ring = std::move(candidates);
    candidates.clear();
    for (const auto& [x, y] : ring) enqueue_neighbours(x, y);
  }
  return out;
}

Image PyramidFusionRefiner::refine(const RasterPyramid& pyramid) const {
  const int c = pyramid.descriptor_channels;
  if (config_.color_head.cols() != c) throw ConfigError("color head width does not match descriptor channels");
  const BasicImage<float> filled = fill(pyramid);
  Image rgb(filled.width(), filled.height(), 3);
  for (int y = 0; y < filled.height(); ++y) {
    for (int x = 0; x < filled.width(); ++x) {
      const auto p = filled.pixel(x, y);
      for (int o = 0; o < 3; ++o) {
        double v = config_.color_bias[o];
        for (int ch = 0; ch < c; ++ch) v += config_.color_head(o, ch) * p[ch];
        rgb.at(x, y, o) = static_cast<float>(std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0);
      }
    }
  }
  return rgb;
}

}  // namespace npbg
