// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/basis.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "byte_io.hpp"
#include "npbg/error.hpp"

namespace npbg {
namespace {

constexpr int kMaxLayerWidth = 256;

// Real SH normalization constants.
const double kY00 = 0.5 * std::sqrt(1.0 / std::numbers::pi);
const double kY1 = std::sqrt(3.0 / (4.0 * std::numbers::pi));
const double kY2a = 0.5 * std::sqrt(15.0 / std::numbers::pi);
const double kY20 = 0.25 * std::sqrt(5.0 / std::numbers::pi);
const double kY22 = 0.25 * std::sqrt(15.0 / std::numbers::pi);

void check_layers(const std::vector<MlpLayer>& layers) {
  if (layers.empty()) throw ConfigError("mlp basis needs at least one layer");
  if (layers.front().in != 3) throw ConfigError("mlp basis input width must be 3");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const MlpLayer& l = layers[i];
    if (l.in < 1 || l.out < 1 || l.in > kMaxLayerWidth || l.out > kMaxLayerWidth) {
      throw ConfigError("mlp layer " + std::to_string(i) + " has unsupported shape " + std::to_string(l.in) +
                        "->" + std::to_string(l.out));
    }
    if (i > 0 && layers[i - 1].out != l.in) {
      throw ConfigError("mlp layer " + std::to_string(i) + " input width does not match previous output");
    }
    if (l.weights.size() != static_cast<std::size_t>(l.in) * l.out || l.bias.size() != static_cast<std::size_t>(l.out)) {
      throw ConfigError("mlp layer " + std::to_string(i) + " weight arrays inconsistent with its shape");
    }
  }
}

// Maps the top 24 bits of a mt19937 draw onto [-1, 1).
float symmetric_unit(std::mt19937& rng) {
  const auto bits = rng() >> 8;
  return static_cast<float>(bits) * (2.0f / 16777216.0f) - 1.0f;
}

}  // namespace

Basis::Basis(BasisKind kind, int m, std::vector<MlpLayer> layers) : kind_(kind), m_(m), layers_(std::move(layers)) {}

Basis Basis::spherical_harmonics(int m) {
  if (m != 1 && m != 4 && m != 9) {
    throw ConfigError("spherical harmonics need a complete band count (m = 1, 4 or 9), got " + std::to_string(m));
  }
  return Basis(BasisKind::kSphericalHarmonics, m, {});
}

Basis Basis::mlp(std::vector<MlpLayer> layers) {
  check_layers(layers);
  const int m = layers.back().out;
  return Basis(BasisKind::kMlp, m, std::move(layers));
}

void Basis::eval(const Eigen::Vector3d& v, std::span<double> out) const {
  if (!(std::abs(v.norm() - 1.0) <= 1e-6)) throw PreconditionError("basis direction must be unit length");
  if (out.size() != static_cast<std::size_t>(m_)) throw PreconditionError("basis output span has wrong length");
  if (kind_ == BasisKind::kSphericalHarmonics) {
    eval_sh(v, out);
  } else {
    eval_mlp(v, out);
  }
}

Eigen::VectorXd Basis::eval(const Eigen::Vector3d& v) const {
  Eigen::VectorXd h(m_);
  eval(v, std::span<double>(h.data(), static_cast<std::size_t>(m_)));
  return h;
}

void Basis::eval_sh(const Eigen::Vector3d& v, std::span<double> out) const {
  const double x = v.x(), y = v.y(), z = v.z();
  out[0] = kY00;
  if (m_ >= 4) {
    out[1] = kY1 * y;
    out[2] = kY1 * z;
    out[3] = kY1 * x;
  }
  if (m_ >= 9) {
    out[4] = kY2a * x * y;
    out[5] = kY2a * y * z;
    out[6] = kY20 * (3.0 * z * z - 1.0);
    out[7] = kY2a * x * z;
    out[8] = kY22 * (x * x - y * y);
  }
}

void Basis::eval_mlp(const Eigen::Vector3d& v, std::span<double> out) const {
  std::array<double, kMaxLayerWidth> a{};
  std::array<double, kMaxLayerWidth> b{};
  a[0] = v.x();
  a[1] = v.y();
  a[2] = v.z();
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const MlpLayer& layer = layers_[li];
    const bool hidden = li + 1 < layers_.size();
    for (int o = 0; o < layer.out; ++o) {
      const float* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in;
      double acc = layer.bias[o];
      for (int i = 0; i < layer.in; ++i) acc += static_cast<double>(row[i]) * a[i];
      b[o] = hidden ? std::tanh(acc) : acc;
    }
    std::swap(a, b);
  }
  for (int i = 0; i < m_; ++i) out[i] = a[i];
}

Basis default_mlp_basis(int m, std::uint32_t seed) {
  if (m < 1) throw ConfigError("basis size must be positive");
  std::mt19937 rng(seed);
  const std::array<std::pair<int, int>, 3> shapes{{{3, 16}, {16, 16}, {16, m}}};
  std::vector<MlpLayer> layers;
  for (const auto& [in, out] : shapes) {
    MlpLayer layer{in, out, std::vector<float>(static_cast<std::size_t>(in) * out), std::vector<float>(out)};
    const float limit = std::sqrt(6.0f / static_cast<float>(in + out));
    for (float& w : layer.weights) w = limit * symmetric_unit(rng);
    for (float& b : layer.bias) b = 0.1f * symmetric_unit(rng);
    layers.push_back(std::move(layer));
  }
  return Basis::mlp(std::move(layers));
}

Basis make_basis(BasisKind kind, int m) {
  return kind == BasisKind::kSphericalHarmonics ? Basis::spherical_harmonics(m) : default_mlp_basis(m);
}

std::vector<std::uint8_t> save_weights(const Basis& basis) {
  std::vector<std::uint8_t> blob;
  if (basis.kind() != BasisKind::kMlp) return blob;
  detail::ByteWriter w(blob);
  w.put(static_cast<std::uint32_t>(basis.layers().size()));
  for (const MlpLayer& layer : basis.layers()) {
    w.put(static_cast<std::uint32_t>(layer.in));
    w.put(static_cast<std::uint32_t>(layer.out));
    w.put_array(std::span<const float>(layer.weights));
    w.put_array(std::span<const float>(layer.bias));
  }
  return blob;
}

Basis load_weights(std::span<const std::uint8_t> blob, std::size_t* consumed) {
  detail::ByteReader r(blob, "mlp weight blob");
  const auto count = r.get<std::uint32_t>();
  if (count == 0 || count > 64) throw FormatError("mlp weight blob: implausible layer count " + std::to_string(count));
  std::vector<MlpLayer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    MlpLayer layer;
    const auto in = r.get<std::uint32_t>();
    const auto out = r.get<std::uint32_t>();
    if (in == 0 || out == 0 || in > kMaxLayerWidth || out > kMaxLayerWidth) {
      throw FormatError("mlp weight blob: layer " + std::to_string(i) + " has unsupported shape");
    }
    layer.in = static_cast<int>(in);
    layer.out = static_cast<int>(out);
    layer.weights.resize(static_cast<std::size_t>(in) * out);
    layer.bias.resize(out);
    r.get_array(std::span<float>(layer.weights));
    r.get_array(std::span<float>(layer.bias));
    layers.push_back(std::move(layer));
  }
  if (consumed != nullptr) {
    *consumed = r.offset();
  } else if (r.remaining() != 0) {
    throw FormatError("mlp weight blob: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  try {
    return Basis::mlp(std::move(layers));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("mlp weight blob: ") + e.what());
  }
}

}  // namespace npbg
