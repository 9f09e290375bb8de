#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pecl/errors.hpp"

namespace pecl {

using RealVector = std::vector<double>;

/// Norms below this are treated as zero (l2_normalize raises, cosine falls
/// back to the documented sim = 0 convention).
inline constexpr double kNormEpsilon = 1e-12;

/// Row-major dense matrix of 64-bit floats.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : values_(rows * cols, value), rows_(rows), cols_(cols) {}

  /// Builds a matrix from equally sized rows. Throws LengthMismatchError.
  static Matrix from_rows(const std::vector<RealVector>& rows);

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return values_.empty(); }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_.data() + r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(values_.data() + r * cols_, cols_);
  }
  RealVector row_copy(std::size_t r) const {
    return RealVector(values_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                      values_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
  }
  std::vector<RealVector> to_rows() const;

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::vector<double> values_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Deterministic seeded generator: xoshiro256++ with splitmix64 seed
/// expansion. Same seed gives a bit-identical stream on every platform;
/// all derived draws (uniform, normal, shuffle) are implemented here rather
/// than via std::<distribution>, which is not portable.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased integer in [0, n); rejection sampled. n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Box-Muller transform; consumes exactly two uniforms per call.
  double normal(double mean = 0.0, double stddev = 1.0);

  /// Fisher-Yates in descending index order.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[static_cast<std::size_t>(uniform_int(i))]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& state) { state_ = state; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
};

double dot(const RealVector& a, const RealVector& b);
double l2_norm(const RealVector& v);

/// v / ||v||. Throws ZeroVectorError when ||v|| <= kNormEpsilon.
RealVector l2_normalize(const RealVector& v);

/// (a.b)/(||a|| ||b||), clamped to [-1, 1]. Returns 0 when either vector is
/// all-zero (no-similarity convention for degenerate label vectors).
double cosine_similarity(const RealVector& a, const RealVector& b);

/// Softmax of scores/tau, computed with a max shift so large scores cannot
/// overflow. Throws NonPositiveTemperatureError when tau <= 0.
RealVector stable_softmax(const RealVector& scores, double tau);

/// Log of stable_softmax, evaluated directly in log space.
RealVector stable_log_softmax(const RealVector& scores, double tau);

/// Central finite differences (f(x+h e) - f(x-h e)) / 2h per coordinate.
RealVector finite_diff_grad(const std::function<double(const RealVector&)>& f, RealVector x,
                            double h = 1e-6);

}  // namespace pecl
