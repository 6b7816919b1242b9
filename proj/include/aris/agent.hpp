#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "aris/nn.hpp"
#include "aris/numerics.hpp"
#include "aris/replay.hpp"

namespace aris {

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 5e-4;
  double critic_lr = 5e-4;
  double alpha_lr = 5e-4;
  double target_entropy = std::numeric_limits<double>::quiet_NaN();  // NaN: -dim(action)
  double initial_alpha = 1.0;
  std::vector<std::size_t> hidden{256, 256};
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("SacConfig: gamma must lie in (0, 1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("SacConfig: tau must lie in (0, 1]");
    if (!(actor_lr > 0.0 && critic_lr > 0.0 && alpha_lr >= 0.0))
      throw std::invalid_argument("SacConfig: learning rates must be positive");
    if (!(initial_alpha > 0.0)) throw std::invalid_argument("SacConfig: initial temperature must be positive");
    if (!(log_std_min < log_std_max)) throw std::invalid_argument("SacConfig: empty log-std range");
  }
};

namespace detail {
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
}  // namespace detail

/// log(1 - tanh(u)^2) without cancellation for large |u|.
inline double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - detail::softplus(-2.0 * u));
}

/// Reparameterized tanh-Gaussian draw for a batch. Columns are samples.
struct PolicySample {
  Matrix mean, log_std, noise, pre_tanh, action;
  Matrix clamped;  // 1 where log-std hit a bound
  Vector log_prob;
  Mlp::Cache cache;
};

/// Evaluates the squashed Gaussian given actor output and fixed noise.
inline PolicySample squash(const Matrix& actor_out, const Matrix& noise, double log_std_min, double log_std_max) {
  const Eigen::Index d = noise.rows(), b = noise.cols();
  if (actor_out.rows() != 2 * d || actor_out.cols() != b) throw DimensionError("squash: actor output shape mismatch");
  PolicySample s;
  s.mean = actor_out.topRows(d);
  const Matrix raw = actor_out.bottomRows(d);
  s.log_std = raw.cwiseMax(log_std_min).cwiseMin(log_std_max);
  s.clamped = (raw.array() < log_std_min || raw.array() > log_std_max).cast<double>().matrix();
  s.noise = noise;
  s.pre_tanh = s.mean + (s.log_std.array().exp() * noise.array()).matrix();
  s.action = s.pre_tanh.array().tanh().matrix();
  s.log_prob = Vector::Zero(b);
  constexpr double half_log_2pi = 0.91893853320467274178;
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < d; ++i)
      s.log_prob[j] += -0.5 * noise(i, j) * noise(i, j) - s.log_std(i, j) - half_log_2pi -
                       log_one_minus_tanh_sq(s.pre_tanh(i, j));
  return s;
}

inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

/// Mean over the batch of w * (q - y)^2 / 2, and its parameter gradient.
inline double critic_loss(const Mlp& q, const Matrix& inputs, const Vector& target, const Vector& weights,
                          Vector* grad = nullptr, Vector* values = nullptr) {
  Mlp::Cache cache;
  const Matrix out = q.forward(inputs, grad ? &cache : nullptr);
  const double b = static_cast<double>(inputs.cols());
  const Eigen::ArrayXd diff = out.row(0).transpose().array() - target.array();
  if (values) *values = out.row(0).transpose();
  if (grad) *grad = q.backward(cache, (weights.array() * diff / b).matrix().transpose());
  return (weights.array() * diff.square()).sum() / (2.0 * b);
}

/// Actor objective mean(alpha * log pi - min(Q1, Q2)) at fixed noise, and its
/// gradient with respect to the actor parameters.
inline double actor_loss(const Mlp& actor, const Mlp& q1, const Mlp& q2, const Matrix& obs, const Matrix& noise,
                         double alpha, double log_std_min, double log_std_max, Vector* grad = nullptr,
                         Vector* log_prob = nullptr) {
  Mlp::Cache cache;
  const Matrix out = actor.forward(obs, grad ? &cache : nullptr);
  const PolicySample s = squash(out, noise, log_std_min, log_std_max);
  const Matrix inputs = stack_rows(obs, s.action);
  Mlp::Cache c1, c2;
  const Matrix v1 = q1.forward(inputs, grad ? &c1 : nullptr);
  const Matrix v2 = q2.forward(inputs, grad ? &c2 : nullptr);
  const Eigen::Index b = obs.cols(), d = noise.rows();
  const double bd = static_cast<double>(b);
  double loss = 0.0;
  Matrix sel1 = Matrix::Zero(1, b), sel2 = Matrix::Zero(1, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const bool first = v1(0, j) <= v2(0, j);
    (first ? sel1 : sel2)(0, j) = 1.0;
    loss += alpha * s.log_prob[j] - (first ? v1(0, j) : v2(0, j));
  }
  loss /= bd;
  if (log_prob) *log_prob = s.log_prob;
  if (!grad) return loss;

  Matrix dq1, dq2;
  q1.backward(c1, sel1, &dq1);
  q2.backward(c2, sel2, &dq2);
  const Matrix dq_da = (dq1 + dq2).bottomRows(d);
  Matrix dout(2 * d, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      const double t = s.action(i, j), sd = std::exp(s.log_std(i, j)), e = noise(i, j);
      const double jac = 1.0 - t * t;
      dout(i, j) = (alpha * 2.0 * t - dq_da(i, j) * jac) / bd;
      const double dls = (alpha * (-1.0 + 2.0 * t * sd * e) - dq_da(i, j) * jac * sd * e) / bd;
      dout(d + i, j) = s.clamped(i, j) != 0.0 ? 0.0 : dls;
    }
  *grad = actor.backward(cache, dout);
  return loss;
}

/// mean(-alpha * (log pi + H_min)) and its derivative in log(alpha).
inline double temperature_loss(double log_alpha, const Vector& log_prob, double target_entropy, double* grad = nullptr) {
  const double alpha = std::exp(log_alpha);
  const double m = (-log_prob.array() - target_entropy).mean();
  if (grad) *grad = alpha * m;
  return alpha * m;
}

/// Soft actor-critic with twin critics, target critics and a learned temperature.
class SacAgent {
 public:
  struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
    double entropy = 0.0;
    std::vector<double> td_errors;
  };

  SacAgent() = default;

  SacAgent(std::size_t obs_dim, std::size_t action_dim, SacConfig cfg, RngStream& init)
      : cfg_(std::move(cfg)), obs_dim_(obs_dim), act_dim_(action_dim) {
    cfg_.validate();
    if (obs_dim == 0 || action_dim == 0) throw std::invalid_argument("SacAgent: empty observation or action");
    if (std::isnan(cfg_.target_entropy)) cfg_.target_entropy = -static_cast<double>(action_dim);
    auto sizes = [&](std::size_t in, std::size_t out) {
      std::vector<std::size_t> s{in};
      s.insert(s.end(), cfg_.hidden.begin(), cfg_.hidden.end());
      s.push_back(out);
      return s;
    };
    actor_ = Mlp(sizes(obs_dim, 2 * action_dim), init);
    q1_ = Mlp(sizes(obs_dim + action_dim, 1), init);
    q2_ = Mlp(sizes(obs_dim + action_dim, 1), init);
    t1_ = q1_;
    t2_ = q2_;
    log_alpha_ = std::log(cfg_.initial_alpha);
    actor_opt_ = Adam(actor_.parameter_count(), cfg_.actor_lr);
    q1_opt_ = Adam(q1_.parameter_count(), cfg_.critic_lr);
    q2_opt_ = Adam(q2_.parameter_count(), cfg_.critic_lr);
    alpha_opt_ = Adam(1, cfg_.alpha_lr);
  }

  const SacConfig& config() const { return cfg_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return act_dim_; }
  double alpha() const { return std::exp(log_alpha_); }
  double log_alpha() const { return log_alpha_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic(int i) const { return i == 0 ? q1_ : q2_; }
  const Mlp& target(int i) const { return i == 0 ? t1_ : t2_; }
  Mlp& mutable_actor() { return actor_; }
  Mlp& mutable_critic(int i) { return i == 0 ? q1_ : q2_; }
  Mlp& mutable_target(int i) { return i == 0 ? t1_ : t2_; }
  void set_log_alpha(double v) { log_alpha_ = v; }

  /// Action in [-1, 1]^d. Deterministic mode returns tanh(mean).
  std::vector<double> select_action(std::span<const double> obs, bool stochastic, RngStream& rng) const {
    if (obs.size() != obs_dim_) throw DimensionError("SacAgent::select_action: observation dimension mismatch");
    const Matrix x = Eigen::Map<const Matrix>(obs.data(), static_cast<Eigen::Index>(obs_dim_), 1);
    const Matrix out = actor_.forward(x);
    Matrix noise = Matrix::Zero(static_cast<Eigen::Index>(act_dim_), 1);
    if (stochastic) noise = draw_noise(1, rng);
    const PolicySample s = squash(out, noise, cfg_.log_std_min, cfg_.log_std_max);
    return {s.action.data(), s.action.data() + act_dim_};
  }

  /// y = r + gamma (1 - done) (min target Q(s', a') - alpha log pi(a'|s')), a' ~ pi(.|s').
  Vector critic_targets(const ReplayBatch& b, RngStream& rng) const {
    const Eigen::Index n = static_cast<Eigen::Index>(b.reward.size());
    const Matrix next = map(b.next_obs, obs_dim_, n);
    const PolicySample s = squash(actor_.forward(next), draw_noise(n, rng), cfg_.log_std_min, cfg_.log_std_max);
    const Matrix in = stack_rows(next, s.action);
    const Matrix v1 = t1_.forward(in), v2 = t2_.forward(in);
    const double a = alpha();
    Vector y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double soft = std::min(v1(0, j), v2(0, j)) - a * s.log_prob[j];
      y[j] = b.reward[j] + cfg_.gamma * (1.0 - b.done[j]) * soft;
    }
    return y;
  }

  /// Steps both critics on the weighted squared TD error. Returns the
  /// per-sample mean absolute TD error of the two critics.
  std::vector<double> update_critics(const ReplayBatch& b, RngStream& rng, double* loss = nullptr) {
    const Eigen::Index n = static_cast<Eigen::Index>(b.reward.size());
    const Vector y = critic_targets(b, rng);
    const Matrix in = stack_rows(map(b.obs, obs_dim_, n), map(b.action, act_dim_, n));
    const Vector w = Eigen::Map<const Vector>(b.weights.data(), n);
    Vector g1, g2, v1, v2;
    const double l1 = critic_loss(q1_, in, y, w, &g1, &v1);
    const double l2 = critic_loss(q2_, in, y, w, &g2, &v2);
    q1_opt_.step(q1_.parameters(), g1);
    q2_opt_.step(q2_.parameters(), g2);
    if (loss) *loss = 0.5 * (l1 + l2);
    std::vector<double> td(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) td[j] = 0.5 * (std::abs(v1[j] - y[j]) + std::abs(v2[j] - y[j]));
    return td;
  }

  /// Steps the actor on its reparameterized objective; critics are untouched.
  double update_actor(const ReplayBatch& b, RngStream& rng, Vector* log_prob = nullptr) {
    const Eigen::Index n = static_cast<Eigen::Index>(b.reward.size());
    const Matrix obs = map(b.obs, obs_dim_, n);
    Vector grad;
    const double loss = actor_loss(actor_, q1_, q2_, obs, draw_noise(n, rng), alpha(), cfg_.log_std_min,
                                   cfg_.log_std_max, &grad, log_prob);
    actor_opt_.step(actor_.parameters(), grad);
    return loss;
  }

  /// One dual step on log(alpha). Returns the new temperature.
  double update_temperature(const Vector& log_prob) {
    double g = 0.0;
    temperature_loss(log_alpha_, log_prob, cfg_.target_entropy, &g);
    Vector p(1), gv(1);
    p[0] = log_alpha_;
    gv[0] = g;
    alpha_opt_.step(p, gv);
    log_alpha_ = p[0];
    return alpha();
  }

  void soft_update() {
    blend(t1_, q1_, cfg_.tau);
    blend(t2_, q2_, cfg_.tau);
  }

  static void blend(Mlp& target, const Mlp& source, double tau) {
    if (target.parameter_count() != source.parameter_count()) throw DimensionError("soft_update: shape mismatch");
    target.parameters() = tau * source.parameters() + (1.0 - tau) * target.parameters();
  }

  /// Critics, then actor, then temperature, then targets.
  UpdateStats update(const ReplayBatch& b, RngStream& rng) {
    UpdateStats st;
    st.td_errors = update_critics(b, rng, &st.critic_loss);
    Vector log_prob;
    st.actor_loss = update_actor(b, rng, &log_prob);
    st.entropy = -log_prob.mean();
    st.alpha = update_temperature(log_prob);
    soft_update();
    return st;
  }

  void save(std::ostream& out) const {
    for (const Mlp* m : {&actor_, &q1_, &q2_, &t1_, &t2_}) write_mlp(out, *m);
    detail::write_f64(out, log_alpha_);
    for (const Adam* a : {&actor_opt_, &q1_opt_, &q2_opt_, &alpha_opt_}) write_adam(out, *a);
  }

  /// Restores parameters and optimizer state; shapes must match this agent.
  void load(std::istream& in) {
    for (Mlp* m : {&actor_, &q1_, &q2_, &t1_, &t2_}) {
      Mlp loaded = read_mlp(in);
      if (loaded.sizes() != m->sizes()) throw std::runtime_error("checkpoint: network shape does not match config");
      *m = std::move(loaded);
    }
    log_alpha_ = detail::read_f64(in);
    for (Adam* a : {&actor_opt_, &q1_opt_, &q2_opt_, &alpha_opt_}) {
      Adam loaded = read_adam(in);
      if (loaded.m.size() != a->m.size()) throw std::runtime_error("checkpoint: optimizer shape mismatch");
      *a = std::move(loaded);
    }
  }

  friend bool operator==(const SacAgent& a, const SacAgent& b) {
    return a.actor_ == b.actor_ && a.q1_ == b.q1_ && a.q2_ == b.q2_ && a.t1_ == b.t1_ && a.t2_ == b.t2_ &&
           a.log_alpha_ == b.log_alpha_;
  }

 private:
  Matrix draw_noise(Eigen::Index n, RngStream& rng) const {
    Matrix e(static_cast<Eigen::Index>(act_dim_), n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = rng.normal();
    return e;
  }

  static Matrix map(const std::vector<double>& v, std::size_t rows, Eigen::Index cols) {
    if (v.size() != rows * static_cast<std::size_t>(cols)) throw DimensionError("SacAgent: batch block has the wrong size");
    return Eigen::Map<const Matrix>(v.data(), static_cast<Eigen::Index>(rows), cols);
  }

  SacConfig cfg_;
  std::size_t obs_dim_ = 0, act_dim_ = 0;
  Mlp actor_, q1_, q2_, t1_, t2_;
  double log_alpha_ = 0.0;
  Adam actor_opt_, q1_opt_, q2_opt_, alpha_opt_;
};

}  // namespace aris
