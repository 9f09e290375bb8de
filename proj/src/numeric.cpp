#include "pecl/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace pecl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<RealVector>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw LengthMismatchError("Matrix::from_rows: ragged rows");
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::vector<RealVector> Matrix::to_rows() const {
  std::vector<RealVector> out;
  out.reserve(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out.push_back(row_copy(r));
  return out;
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

std::uint64_t SeededRng::uniform_int(std::uint64_t n) {
  if (n == 0) throw InvalidConfigError("uniform_int: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double SeededRng::normal(double mean, double stddev) {
  const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(kTwoPi * u2);
}

double dot(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) throw LengthMismatchError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const RealVector& v) { return std::sqrt(dot(v, v)); }

RealVector l2_normalize(const RealVector& v) {
  const double norm = l2_norm(v);
  if (!std::isfinite(norm)) throw Error("l2_normalize: non-finite input");
  if (norm <= kNormEpsilon) throw ZeroVectorError("l2_normalize: zero vector");
  RealVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

double cosine_similarity(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) throw LengthMismatchError("cosine_similarity: length mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na <= kNormEpsilon || nb <= kNormEpsilon) return 0.0;
  const double sim = dot(a, b) / (na * nb);
  return std::clamp(sim, -1.0, 1.0);
}

RealVector stable_log_softmax(const RealVector& scores, double tau) {
  if (tau <= 0.0) throw NonPositiveTemperatureError("softmax: tau must be positive");
  if (scores.empty()) throw EmptyBatchError("softmax: empty score vector");
  RealVector shifted(scores.size());
  double maxv = scores[0] / tau;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    shifted[i] = scores[i] / tau;
    if (!std::isfinite(shifted[i])) throw Error("softmax: non-finite score");
    maxv = std::max(maxv, shifted[i]);
  }
  double sum = 0.0;
  for (auto& s : shifted) {
    s -= maxv;
    sum += std::exp(s);
  }
  const double log_sum = std::log(sum);
  for (auto& s : shifted) s -= log_sum;
  return shifted;
}

RealVector stable_softmax(const RealVector& scores, double tau) {
  RealVector out = stable_log_softmax(scores, tau);
  for (auto& v : out) v = std::exp(v);
  return out;
}

RealVector finite_diff_grad(const std::function<double(const RealVector&)>& f, RealVector x,
                            double h) {
  RealVector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace pecl
