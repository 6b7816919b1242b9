#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aris/numerics.hpp"

namespace aris {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {
// Elementwise tanh through the vectorized exp; Eigen evaluates double tanh
// one scalar at a time. The odd series covers |x| < 0.1, where 1 - t would
// cancel. Relative error stays within a few ulps.
inline Matrix tanh(const Matrix& z) {
  const Eigen::ArrayXXd a = z.array().abs();
  const Eigen::ArrayXXd t = (-2.0 * a).exp();
  const Eigen::ArrayXXd x2 = a.square();
  const Eigen::ArrayXXd series =
      a * (1.0 + x2 * (-1.0 / 3 + x2 * (2.0 / 15 + x2 * (-17.0 / 315 + x2 * (62.0 / 2835 +
          x2 * (-1382.0 / 155925 + x2 * (21844.0 / 6081075 + x2 * (-929569.0 / 638512875))))))));
  return (z.array().sign() * (a < 0.1).select(series, (1.0 - t) / (1.0 + t))).matrix();
}
}  // namespace detail

/// Dense network with tanh hidden layers and a linear output. All
/// parameters live in one flat vector: for each layer, the weight matrix
/// (out x in, column-major) followed by the bias.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // input of each layer; hidden ones are tanh outputs
  };

  Mlp() = default;

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  Mlp(std::vector<std::size_t> sizes, RngStream& rng) : sizes_(std::move(sizes)) {
    layout();
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      auto w = weight(l);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    }
  }

  /// All-zero parameters.
  explicit Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) { layout(); }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  Eigen::Map<Matrix> weight(std::size_t l) {
    return {params_.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]), static_cast<Eigen::Index>(sizes_[l])};
  }
  Eigen::Map<const Matrix> weight(std::size_t l) const {
    return {params_.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]), static_cast<Eigen::Index>(sizes_[l])};
  }
  Eigen::Map<Vector> bias(std::size_t l) {
    return {params_.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], static_cast<Eigen::Index>(sizes_[l + 1])};
  }
  Eigen::Map<const Vector> bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], static_cast<Eigen::Index>(sizes_[l + 1])};
  }

  /// Batched forward pass; columns of x are samples.
  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    if (static_cast<std::size_t>(x.rows()) != input_dim()) throw DimensionError("Mlp::forward: input dimension mismatch");
    if (cache) cache->inputs.clear();
    Matrix a = x;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      if (cache) cache->inputs.push_back(a);
      Matrix z = weight(l) * a;
      z.colwise() += bias(l);
      if (l + 1 < layer_count())
        a = detail::tanh(z);
      else
        a = std::move(z);
    }
    return a;
  }

  /// Reverse pass. Returns the flat parameter gradient of sum(dout .* output);
  /// writes the input gradient when `dinput` is given.
  Vector backward(const Cache& cache, const Matrix& dout, Matrix* dinput = nullptr) const {
    if (cache.inputs.size() != layer_count()) throw std::invalid_argument("Mlp::backward: cache does not match network");
    Vector grad = Vector::Zero(params_.size());
    Matrix dz = dout;
    for (std::size_t l = layer_count(); l-- > 0;) {
      const Matrix& in = cache.inputs[l];
      Eigen::Map<Matrix>(grad.data() + offsets_[l], weight(l).rows(), weight(l).cols()).noalias() =
          dz * in.transpose();
      Eigen::Map<Vector>(grad.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], bias(l).size()) = dz.rowwise().sum();
      if (l > 0 || dinput) {
        Matrix da = weight(l).transpose() * dz;
        if (l > 0)
          dz = (da.array() * (1.0 - in.array().square())).matrix();
        else
          *dinput = std::move(da);
      }
    }
    return grad;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) { return a.sizes_ == b.sizes_ && a.params_ == b.params_; }

 private:
  void layout() {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
    for (std::size_t s : sizes_)
      if (s == 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
    offsets_.clear();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(off);
      off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    }
    params_ = Vector::Zero(static_cast<Eigen::Index>(off));
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  Vector params_;
};

/// Bias-corrected Adam on a flat parameter vector.
struct Adam {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Vector m, v;
  std::uint64_t steps = 0;

  Adam() = default;
  Adam(std::size_t n, double lr) : learning_rate(lr), m(Vector::Zero(static_cast<Eigen::Index>(n))), v(m) {}

  void step(Vector& params, const Vector& grad) {
    if (grad.size() != params.size() || m.size() != params.size())
      throw DimensionError("Adam::step: gradient, moments and parameters must have equal size");
    ++steps;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    params.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
  }
};

/// Central-difference check of `analytic` against `loss` at `params`, over at
/// most `max_checks` randomly chosen coordinates (all when 0). Returns the
/// largest |a - n| / max(|a|, |n|, floor).
inline double gradient_check(Vector params, const std::function<double(const Vector&)>& loss, const Vector& analytic,
                             RngStream& rng, std::size_t max_checks = 0, double step = 1e-5, double floor = 1e-8) {
  if (analytic.size() != params.size()) throw DimensionError("gradient_check: gradient size mismatch");
  const std::size_t n = static_cast<std::size_t>(params.size());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (max_checks > 0 && max_checks < n) {
    for (std::size_t i = 0; i < max_checks; ++i) std::swap(idx[i], idx[i + rng() % (n - i)]);
    idx.resize(max_checks);
  }
  double worst = 0.0;
  for (std::size_t i : idx) {
    const double orig = params[i];
    params[i] = orig + step;
    const double up = loss(params);
    params[i] = orig - step;
    const double down = loss(params);
    params[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[i];
    worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor}));
  }
  return worst;
}

namespace detail {
inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
inline void write_f64(std::ostream& out, double x) { write_u64(out, std::bit_cast<std::uint64_t>(x)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }
}  // namespace detail

inline constexpr char kMlpMagic[8] = {'A', 'R', 'I', 'S', 'M', 'L', 'P', '1'};

/// Layout: 8-byte magic "ARISMLP1", u64 layer-size count, u64 sizes, u64
/// parameter count, then the parameters as f64. Integers and floats are
/// little-endian.
inline void write_mlp(std::ostream& out, const Mlp& net) {
  out.write(kMlpMagic, 8);
  detail::write_u64(out, net.sizes().size());
  for (std::size_t s : net.sizes()) detail::write_u64(out, s);
  detail::write_u64(out, net.parameter_count());
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) detail::write_f64(out, net.parameters()[i]);
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

inline Mlp read_mlp(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMlpMagic, 8) != 0) throw std::runtime_error("checkpoint: bad network header");
  const std::uint64_t layers = detail::read_u64(in);
  if (layers < 2 || layers > 64) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<std::size_t> sizes(layers);
  for (auto& s : sizes) s = detail::read_u64(in);
  Mlp net(sizes);
  if (detail::read_u64(in) != net.parameter_count()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) net.parameters()[i] = detail::read_f64(in);
  return net;
}

inline void write_vector(std::ostream& out, const Vector& v) {
  detail::write_u64(out, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) detail::write_f64(out, v[i]);
}

inline Vector read_vector(std::istream& in) {
  const std::uint64_t n = detail::read_u64(in);
  if (n > (1ULL << 32)) throw std::runtime_error("checkpoint: implausible vector length");
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = detail::read_f64(in);
  return v;
}

inline void write_adam(std::ostream& out, const Adam& a) {
  detail::write_f64(out, a.learning_rate);
  detail::write_f64(out, a.beta1);
  detail::write_f64(out, a.beta2);
  detail::write_f64(out, a.epsilon);
  detail::write_u64(out, a.steps);
  write_vector(out, a.m);
  write_vector(out, a.v);
}

inline Adam read_adam(std::istream& in) {
  Adam a;
  a.learning_rate = detail::read_f64(in);
  a.beta1 = detail::read_f64(in);
  a.beta2 = detail::read_f64(in);
  a.epsilon = detail::read_f64(in);
  a.steps = detail::read_u64(in);
  a.m = read_vector(in);
  a.v = read_vector(in);
  return a;
}

}  // namespace aris
