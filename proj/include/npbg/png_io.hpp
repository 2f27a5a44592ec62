// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "npbg/image.hpp"

namespace npbg {

// 8-bit PNG codec. Decoding accepts gray, gray+alpha, RGB, RGBA and palette
// inputs (alpha composited onto black, 16-bit reduced) and yields a 3-channel image in
// [0,1]. Encoding clamps to [0,1] and rounds to the nearest 8-bit level.
Image decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& image);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace npbg
