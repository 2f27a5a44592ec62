// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "npbg/basis.hpp"

namespace npbg {

// Closed-form coefficients of y(v) = H(v) * beta + beta0 for one point.
struct Coefficients {
  Eigen::VectorXd beta0;  // c
  Eigen::MatrixXd beta;   // m x c
};

enum class SolvePolicy {
  kStrict,                 // singular system -> NumericalError
  kPseudoInverseFallback,  // singular system -> minimum-norm solution
};

// Running sufficient statistics of one point's (H(v_k), y_k) samples:
//
//   K, sum y_k (c), sum H_k^T y_k (m x c), sum H_k^T (m), sum H_k^T H_k (m x m)
//
// accumulated in double precision. The footprint depends on (m, c) only,
// never on the number of samples, and the sums commute so the result of
// finalize() does not depend on the order in which views were processed.
class AggregationState {
 public:
  AggregationState() = default;
  AggregationState(int m, int c);

  int basis_size() const { return m_; }
  int channels() const { return c_; }
  std::uint64_t count() const { return count_; }

  // h is H(v) (length m), y the sampled descriptor (length c). Throws
  // PreconditionError on non-finite or mis-sized input; the state is left
  // untouched in that case.
  void update(std::span<const double> h, std::span<const double> y);
  void update(const Basis& basis, const Eigen::Vector3d& v, std::span<const double> y);

  // Component-wise sum. Throws ConfigError if (m, c) differ.
  void merge(const AggregationState& other);

  // Mean descriptor and ridge solution. Returns nullopt when count() == 0.
  // For alpha > 0 the system matrix is positive definite; with alpha == 0 a
  // singular system is handled per policy. point is only used in messages.
  std::optional<Coefficients> finalize(double alpha, SolvePolicy policy = SolvePolicy::kStrict,
                                       std::int64_t point = -1, bool* used_fallback = nullptr) const;

  Eigen::Map<const Eigen::VectorXd> sum_y() const;
  Eigen::Map<const Eigen::MatrixXd> sum_hty() const;  // m x c, column-major
  Eigen::Map<const Eigen::VectorXd> sum_ht() const;
  Eigen::Map<const Eigen::MatrixXd> sum_hth() const;  // m x m

  // Fixed-size little-endian encoding: u32 m, u32 c, u64 K, then the four
  // sums as f64. byte_size() is a function of (m, c) only.
  std::vector<std::uint8_t> serialize() const;
  static AggregationState deserialize(std::span<const std::uint8_t> bytes);
  static std::size_t byte_size(int m, int c);

 private:
  std::size_t off_hty() const { return static_cast<std::size_t>(c_); }
  std::size_t off_ht() const { return off_hty() + static_cast<std::size_t>(m_) * c_; }
  std::size_t off_hth() const { return off_ht() + m_; }

  int m_ = 0;
  int c_ = 0;
  std::uint64_t count_ = 0;
  std::vector<double> sums_;  // [sum_y | sum_hty | sum_ht | sum_hth]
};

// y(v) = H(v) * beta + beta0, writing c values into out.
void eval_descriptor(std::span<const float> beta0, std::span<const float> beta, const Basis& basis,
                     const Eigen::Vector3d& v, std::span<float> out);
Eigen::VectorXd eval_descriptor(const Coefficients& coeffs, const Basis& basis, const Eigen::Vector3d& v);

}  // namespace npbg
