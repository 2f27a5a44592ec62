// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

// NPBD descriptor model container, little-endian:
//
//   "NPBD"            4 bytes magic
//   version           u32 = 1
//   N                 u64 point count
//   m                 u32 basis size
//   c                 u32 descriptor channels
//   basis kind        u8  (0 = SH, 1 = MLP)
//   alive mask        N bytes
//   per point         beta0 (c f32), beta (m*c f32, row-major over m)
//   MLP weight blob   only for kind 1, see basis.hpp
//
// A file may continue with an "NPBS" scene section (written by
// save_scene_model); anything else after the payload is a length error.

#include <algorithm>
#include <array>
#include <cstring>
#include <string>

#include "byte_io.hpp"
#include "npbg/error.hpp"
#include "npbg/scene.hpp"

namespace npbg {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'N', 'P', 'B', 'D'};
constexpr std::array<std::uint8_t, 4> kSceneMagic{'N', 'P', 'B', 'S'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_descriptor_field(const DescriptorField& field) {
  validate(field);
  std::vector<std::uint8_t> out;
  detail::ByteWriter w(out);
  w.put_bytes(kMagic);
  w.put(kVersion);
  w.put(static_cast<std::uint64_t>(field.num_points));
  w.put(static_cast<std::uint32_t>(field.m));
  w.put(static_cast<std::uint32_t>(field.c));
  w.put(static_cast<std::uint8_t>(field.basis->kind()));
  w.put_bytes(field.alive);
  for (std::size_t i = 0; i < field.num_points; ++i) {
    w.put_array(field.beta0_of(i));
    w.put_array(field.beta_of(i));
  }
  w.put_bytes(save_weights(*field.basis));
  return out;
}

DescriptorField deserialize_descriptor_field(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  detail::ByteReader r(bytes, "descriptor model");
  const auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw FormatError("descriptor model: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError("descriptor model: unsupported version " + std::to_string(version));
  }
  const auto n = r.get<std::uint64_t>();
  const auto m = r.get<std::uint32_t>();
  const auto c = r.get<std::uint32_t>();
  const auto kind_byte = r.get<std::uint8_t>();
  if (kind_byte > 1) throw FormatError("descriptor model: unknown basis kind " + std::to_string(kind_byte));
  if (m == 0 || c == 0 || m > 4096 || c > 4096) throw FormatError("descriptor model: implausible m or c");

  const std::uint64_t per_point = (static_cast<std::uint64_t>(c) + static_cast<std::uint64_t>(m) * c) * 4 + 1;
  if (n > r.remaining() / per_point) {
    throw FormatError("descriptor model: header declares " + std::to_string(n) + " points but payload holds " +
                      std::to_string(r.remaining() / per_point));
  }

  DescriptorField field;
  field.num_points = n;
  field.m = static_cast<int>(m);
  field.c = static_cast<int>(c);
  field.alive.resize(n);
  r.get_array(std::span<std::uint8_t>(field.alive));
  field.beta0.resize(n * c);
  field.beta.resize(n * m * c);
  for (std::size_t i = 0; i < n; ++i) {
    r.get_array(std::span<float>(field.beta0.data() + i * c, c));
    r.get_array(std::span<float>(field.beta.data() + i * m * c, static_cast<std::size_t>(m) * c));
  }

  const auto kind = static_cast<BasisKind>(kind_byte);
  try {
    if (kind == BasisKind::kMlp) {
      std::size_t used = 0;
      field.basis = std::make_shared<const Basis>(load_weights(r.rest(), &used));
      r.get_bytes(used);
    } else {
      field.basis = std::make_shared<const Basis>(Basis::spherical_harmonics(static_cast<int>(m)));
    }
  } catch (const ConfigError& e) {
    throw FormatError(std::string("descriptor model: ") + e.what());
  }
  if (field.basis->size() != field.m) throw FormatError("descriptor model: basis size does not match header m");

  if (consumed != nullptr) {
    *consumed = r.offset();
  } else if (r.remaining() != 0) {
    throw FormatError("descriptor model: " + std::to_string(r.remaining()) + " bytes beyond the declared payload");
  }
  try {
    validate(field);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("descriptor model: ") + e.what());
  }
  return field;
}

void save_descriptor_field(const DescriptorField& field, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_descriptor_field(field));
}

DescriptorField load_descriptor_field(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t used = 0;
  DescriptorField field = deserialize_descriptor_field(bytes, &used);
  const std::size_t rest = bytes.size() - used;
  const bool scene_section =
      rest >= kSceneMagic.size() && std::equal(kSceneMagic.begin(), kSceneMagic.end(), bytes.begin() + used);
  if (rest != 0 && !scene_section) {
    throw FormatError(path.string() + ": " + std::to_string(rest) + " bytes beyond the declared payload");
  }
  return field;
}

}  // namespace npbg
