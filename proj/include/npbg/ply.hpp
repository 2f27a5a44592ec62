// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "npbg/scene.hpp"

namespace npbg {

// Reads the vertex element of an ASCII or binary (either endianness) PLY
// file. x, y, z may be any scalar type; red, green, blue are taken as uchar
// (divided by 255) or float in [0,1]. Other elements and properties are
// skipped. Throws ParseError with the offending vertex index.
PointCloud parse_ply(std::span<const std::uint8_t> bytes);

enum class PlyEncoding { kAscii, kBinaryLittleEndian };

// Writes x, y, z as float and, when present, colors as uchar.
std::vector<std::uint8_t> format_ply(const PointCloud& cloud, PlyEncoding encoding);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian);

}  // namespace npbg
