#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace aris {

using cd = std::complex<double>;

/// Raised for dimension mismatches and other violated preconditions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense complex matrix stored row-major. Value type; copies are deep.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols, cd fill = cd{0.0, 0.0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cd> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("ComplexMatrix: entry count does not match rows*cols");
    }
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  cd& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cd& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<cd>& data() const { return data_; }
  std::vector<cd>& data() { return data_; }

  ComplexMatrix adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  ComplexMatrix transpose() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw DimensionError("ComplexMatrix +=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  ComplexMatrix& operator*=(cd s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator*(cd s, ComplexMatrix a) { return a *= s; }

  /// Frobenius norm.
  double norm() const {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (const auto& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cd> data_;
};

inline ComplexMatrix cmat_mul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("cmat_mul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cd aik = a(i, k);
      if (aik == cd{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) { return cmat_mul(a, b); }

/// Solves a*x = b for Hermitian positive (semi)definite a via Cholesky on
/// a + loading*I, loading = 1e-12 * trace(a) / n.
inline ComplexMatrix hermitian_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("hermitian_solve: matrix is not square");
  if (b.rows() != n) throw DimensionError("hermitian_solve: right-hand side row count mismatch");
  if (n == 0) return ComplexMatrix(0, b.cols());

  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += a(i, i).real();
  const double loading = 1e-12 * trace / static_cast<double>(n);

  ComplexMatrix loaded = a;
  for (std::size_t i = 0; i < n; ++i) loaded(i, i) += loading;

  // lower-triangular factor, loaded = L L^H
  ComplexMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = loaded(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > 0.0) || !std::isfinite(d)) throw SingularMatrixError("hermitian_solve: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      cd s = loaded(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }

  ComplexMatrix x(n, b.cols());
  std::vector<cd> y(n);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      cd s = b(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      cd s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x(k, c);
      x(ii, c) = s / l(ii, ii).real();
    }
  }

  ComplexMatrix residual = cmat_mul(loaded, x);
  for (std::size_t i = 0; i < residual.size(); ++i) residual.data()[i] -= b.data()[i];
  const double bnorm = b.norm();
  if (!x.all_finite() || residual.norm() > 1e-10 * bnorm) {
    throw SingularMatrixError("hermitian_solve: residual check failed");
  }
  return x;
}

/// xoshiro256** bit generator with splitmix64 seeding. Satisfies
/// UniformRandomBitGenerator so it composes with <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  std::uint64_t seed() const { return seed_; }

  /// Independent child stream; deterministic in (seed, stream_id).
  RngStream derive(std::uint64_t stream_id) const {
    std::uint64_t sm = seed_ ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1));
    return RngStream(splitmix64(sm));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by Box-Muller, one value per call. Keeps no cached
  /// spare, so state() alone determines the rest of the stream.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  const std::array<std::uint64_t, 4>& state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

/// Entries (x + iy)/sqrt(2), x and y standard normal: CN(0, 1).
inline ComplexMatrix sample_complex_gaussian(RngStream& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw DimensionError("sample_complex_gaussian: empty shape");
  ComplexMatrix out(rows, cols);
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  for (auto& v : out.data()) {
    const double re = rng.normal();
    const double im = rng.normal();
    v = cd{re * inv_sqrt2, im * inv_sqrt2};
  }
  return out;
}

}  // namespace aris
