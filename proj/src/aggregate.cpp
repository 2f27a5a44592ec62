// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/aggregate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "byte_io.hpp"
#include "npbg/error.hpp"

namespace npbg {
namespace {

constexpr int kMaxBasis = 256;

bool all_finite(std::span<const double> v) {
  return std::ranges::all_of(v, [](double x) { return std::isfinite(x); });
}

std::string point_label(std::int64_t point) {
  return point >= 0 ? "point " + std::to_string(point) : std::string("point");
}

}  // namespace

AggregationState::AggregationState(int m, int c) : m_(m), c_(c) {
  if (m < 1 || c < 1) throw ConfigError("aggregation state needs m >= 1 and c >= 1");
  sums_.assign(static_cast<std::size_t>(c) + static_cast<std::size_t>(m) * c + m + static_cast<std::size_t>(m) * m,
               0.0);
}

void AggregationState::update(std::span<const double> h, std::span<const double> y) {
  if (h.size() != static_cast<std::size_t>(m_) || y.size() != static_cast<std::size_t>(c_)) {
    throw PreconditionError("aggregation update: expected h of size " + std::to_string(m_) + " and y of size " +
                            std::to_string(c_));
  }
  if (!all_finite(y)) throw PreconditionError("aggregation update: descriptor sample is not finite");
  if (!all_finite(h)) throw PreconditionError("aggregation update: basis value is not finite");

  double* sy = sums_.data();
  double* shty = sy + off_hty();
  double* sht = sy + off_ht();
  double* shth = sy + off_hth();
  for (int j = 0; j < c_; ++j) sy[j] += y[j];
  // Column-major m x c.
  for (int j = 0; j < c_; ++j) {
    for (int i = 0; i < m_; ++i) shty[static_cast<std::size_t>(j) * m_ + i] += h[i] * y[j];
  }
  for (int i = 0; i < m_; ++i) sht[i] += h[i];
  for (int j = 0; j < m_; ++j) {
    for (int i = 0; i < m_; ++i) shth[static_cast<std::size_t>(j) * m_ + i] += h[i] * h[j];
  }
  ++count_;
}

void AggregationState::update(const Basis& basis, const Eigen::Vector3d& v, std::span<const double> y) {
  if (basis.size() != m_) throw ConfigError("aggregation update: basis size does not match state");
  std::array<double, kMaxBasis> h{};
  if (m_ > kMaxBasis) throw ConfigError("aggregation update: basis too large");
  basis.eval(v, std::span<double>(h.data(), static_cast<std::size_t>(m_)));
  update(std::span<const double>(h.data(), static_cast<std::size_t>(m_)), y);
}

void AggregationState::merge(const AggregationState& other) {
  if (other.m_ != m_ || other.c_ != c_) {
    throw ConfigError("cannot merge aggregation states with different (m, c)");
  }
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += other.sums_[i];
  count_ += other.count_;
}

Eigen::Map<const Eigen::VectorXd> AggregationState::sum_y() const { return {sums_.data(), c_}; }
Eigen::Map<const Eigen::MatrixXd> AggregationState::sum_hty() const { return {sums_.data() + off_hty(), m_, c_}; }
Eigen::Map<const Eigen::VectorXd> AggregationState::sum_ht() const { return {sums_.data() + off_ht(), m_}; }
Eigen::Map<const Eigen::MatrixXd> AggregationState::sum_hth() const { return {sums_.data() + off_hth(), m_, m_}; }

std::optional<Coefficients> AggregationState::finalize(double alpha, SolvePolicy policy, std::int64_t point,
                                                       bool* used_fallback) const {
  if (used_fallback != nullptr) *used_fallback = false;
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw PreconditionError("regularizer alpha must be >= 0");
  if (count_ == 0) return std::nullopt;
  const double k = static_cast<double>(count_);

  Coefficients out;
  out.beta0 = sum_y() / k;
  // R = (sum H^T y - sum H^T beta0) / K
  const Eigen::MatrixXd rhs = (sum_hty() - sum_ht() * out.beta0.transpose()) / k;
  Eigen::MatrixXd system = sum_hth() / k;
  system.diagonal().array() += alpha / k;

  // LDL^T needs no square roots, so e.g. a 1 x 1 system solves to the
  // correctly rounded quotient.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double pivot_floor = d.cwiseAbs().maxCoeff() * m_ * std::numeric_limits<double>::epsilon();
  if (ldlt.info() == Eigen::Success && d.minCoeff() > pivot_floor) {
    out.beta = ldlt.solve(rhs);
    if (out.beta.allFinite()) return out;
  }
  if (policy == SolvePolicy::kStrict) {
    throw NumericalError(point_label(point) + ": regularized normal matrix is singular (alpha = " +
                         std::to_string(alpha) + ", K = " + std::to_string(count_) + ")");
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(system);
  out.beta = cod.solve(rhs);
  if (!out.beta.allFinite()) {
    throw NumericalError(point_label(point) + ": pseudo-inverse solve produced non-finite coefficients");
  }
  if (used_fallback != nullptr) *used_fallback = true;
  return out;
}

std::size_t AggregationState::byte_size(int m, int c) {
  const std::size_t doubles =
      static_cast<std::size_t>(c) + static_cast<std::size_t>(m) * c + m + static_cast<std::size_t>(m) * m;
  return 4 + 4 + 8 + doubles * sizeof(double);
}

std::vector<std::uint8_t> AggregationState::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(byte_size(m_, c_));
  detail::ByteWriter w(out);
  w.put(static_cast<std::uint32_t>(m_));
  w.put(static_cast<std::uint32_t>(c_));
  w.put(count_);
  w.put_array(std::span<const double>(sums_));
  return out;
}

AggregationState AggregationState::deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "aggregation state");
  const auto m = r.get<std::uint32_t>();
  const auto c = r.get<std::uint32_t>();
  if (m == 0 || c == 0 || m > kMaxBasis || c > 4096) throw FormatError("aggregation state: implausible (m, c)");
  AggregationState s(static_cast<int>(m), static_cast<int>(c));
  s.count_ = r.get<std::uint64_t>();
  r.get_array(std::span<double>(s.sums_));
  if (r.remaining() != 0) throw FormatError("aggregation state: trailing bytes");
  return s;
}

void eval_descriptor(std::span<const float> beta0, std::span<const float> beta, const Basis& basis,
                     const Eigen::Vector3d& v, std::span<float> out) {
  const int m = basis.size();
  const std::size_t c = beta0.size();
  if (beta.size() != static_cast<std::size_t>(m) * c || out.size() != c) {
    throw PreconditionError("eval_descriptor: coefficient sizes do not match the basis");
  }
  std::array<double, kMaxBasis> h{};
  basis.eval(v, std::span<double>(h.data(), static_cast<std::size_t>(m)));
  for (std::size_t j = 0; j < c; ++j) {
    double acc = beta0[j];
    for (int i = 0; i < m; ++i) acc += h[i] * static_cast<double>(beta[static_cast<std::size_t>(i) * c + j]);
    out[j] = static_cast<float>(acc);
  }
}

Eigen::VectorXd eval_descriptor(const Coefficients& coeffs, const Basis& basis, const Eigen::Vector3d& v) {
  const Eigen::VectorXd h = basis.eval(v);
  return coeffs.beta.transpose() * h + coeffs.beta0;
}

}  // namespace npbg
