// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace npbg {

enum class BasisKind : std::uint8_t { kSphericalHarmonics = 0, kMlp = 1 };

// One fully connected layer, weights row-major (out x in).
struct MlpLayer {
  int in = 0;
  int out = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  bool operator==(const MlpLayer&) const = default;
};

// Set of m basis functions over the unit sphere, H: S^2 -> R^m.
//
// Spherical harmonics use the real, orthonormal convention ordered by band l
// ascending and, within a band, by index -l..l; band 1 is (y, z, x) up to
// normalization. Only complete bands are allowed, so m is 1, 4 or 9.
//
// The MLP variant is a feed-forward network on the raw direction with tanh
// on hidden layers and a linear output layer. Weights are shared by every
// point of a scene.
class Basis {
 public:
  static Basis spherical_harmonics(int m);
  static Basis mlp(std::vector<MlpLayer> layers);

  BasisKind kind() const { return kind_; }
  int size() const { return m_; }
  const std::vector<MlpLayer>& layers() const { return layers_; }

  // Writes H(v) into out (length m). Throws PreconditionError if |v| is not
  // within 1e-6 of one.
  void eval(const Eigen::Vector3d& v, std::span<double> out) const;
  Eigen::VectorXd eval(const Eigen::Vector3d& v) const;

  bool operator==(const Basis&) const = default;

 private:
  Basis(BasisKind kind, int m, std::vector<MlpLayer> layers);

  void eval_sh(const Eigen::Vector3d& v, std::span<double> out) const;
  void eval_mlp(const Eigen::Vector3d& v, std::span<double> out) const;

  BasisKind kind_;
  int m_;
  std::vector<MlpLayer> layers_;
};

// 3 -> 16 -> 16 -> m network with Glorot-uniform weights drawn from a
// fixed-seed mt19937. Stands in for trained weights; bit-identical on every
// platform.
Basis default_mlp_basis(int m = 6, std::uint32_t seed = 20211115u);

// Builds a basis of the given kind with the library defaults.
Basis make_basis(BasisKind kind, int m);

// Weight blob: u32 layer count, then per layer u32 in, u32 out, out*in f32
// weights (row-major), out f32 biases. Spherical harmonics have no weights
// and serialize to an empty blob.
std::vector<std::uint8_t> save_weights(const Basis& basis);

// Parses an MLP weight blob. If consumed is non-null the blob may carry
// trailing bytes and the number of bytes read is reported; otherwise the
// blob must be consumed exactly.
Basis load_weights(std::span<const std::uint8_t> blob, std::size_t* consumed = nullptr);

}  // namespace npbg
