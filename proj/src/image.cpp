// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/image.hpp"

#include <algorithm>

namespace npbg {

template <typename T>
BasicImage<T> rotate_quarter_turns(const BasicImage<T>& src, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return src;
  const int w = src.width();
  const int h = src.height();
  const int c = src.channels();
  const bool swap = (k % 2) == 1;
  BasicImage<T> dst(swap ? h : w, swap ? w : h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int nx = x;
      int ny = y;
      switch (k) {
        case 1: nx = h - 1 - y; ny = x; break;
        case 2: nx = w - 1 - x; ny = h - 1 - y; break;
        case 3: nx = y; ny = w - 1 - x; break;
      }
      std::ranges::copy(src.pixel(x, y), dst.pixel(nx, ny).begin());
    }
  }
  return dst;
}

template BasicImage<float> rotate_quarter_turns(const BasicImage<float>&, int);
template BasicImage<double> rotate_quarter_turns(const BasicImage<double>&, int);

}  // namespace npbg
