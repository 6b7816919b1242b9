#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "aris/numerics.hpp"

namespace aris {

/// Complete binary tree of partial sums over a power-of-two number of leaves.
/// Parents are recomputed from their children on every write, so each
/// internal node is exactly the floating-point sum of its two children.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity) {
    if (capacity == 0) throw std::invalid_argument("SumTree: capacity must be positive");
    leaves_ = std::bit_ceil(capacity);
    nodes_.assign(2 * leaves_, 0.0);
  }

  std::size_t leaf_count() const { return leaves_; }
  double total() const { return nodes_[1]; }
  double leaf(std::size_t i) const { return nodes_[leaves_ + i]; }
  /// Node array with the root at index 1 and leaf i at leaf_count() + i.
  const std::vector<double>& nodes() const { return nodes_; }

  void set(std::size_t i, double value) {
    if (i >= leaves_) throw std::out_of_range("SumTree::set: leaf index out of range");
    if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("SumTree::set: value must be finite and >= 0");
    std::size_t n = leaves_ + i;
    nodes_[n] = value;
    for (n /= 2; n >= 1; n /= 2) nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
  }

  /// Leaf whose cumulative interval contains `mass`; masses past the total
  /// land on the last non-empty leaf.
  std::size_t find(double mass) const {
    std::size_t n = 1;
    while (n < leaves_) {
      const std::size_t left = 2 * n;
      if (mass < nodes_[left] || nodes_[left + 1] == 0.0) {
        n = left;
      } else {
        mass -= nodes_[left];
        n = left + 1;
      }
    }
    return n - leaves_;
  }

 private:
  std::size_t leaves_ = 0;
  std::vector<double> nodes_;
};

/// One batch drawn from a replay buffer, columns are samples.
struct ReplayBatch {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
  std::vector<double> obs, action, reward, next_obs, done;  // column-major blocks
};

struct ReplayConfig {
  std::size_t capacity = 1 << 19;
  std::size_t batch_size = 256;
  double priority_exponent = 0.6;   // beta1
  double weight_exponent_start = 0.4;  // beta2 schedule
  double weight_exponent_end = 1.0;
  std::size_t anneal_steps = 100000;
  double priority_floor = 1e-5;     // epsilon

  void validate() const {
    if (capacity == 0 || batch_size == 0) throw std::invalid_argument("ReplayConfig: capacity and batch size must be positive");
    if (priority_exponent < 0.0) throw std::invalid_argument("ReplayConfig: priority exponent must be >= 0");
    if (weight_exponent_start < 0.0 || weight_exponent_start > 1.0 || weight_exponent_end < 0.0 ||
        weight_exponent_end > 1.0)
      throw std::invalid_argument("ReplayConfig: weight exponents must lie in [0, 1]");
    if (!(priority_floor > 0.0)) throw std::invalid_argument("ReplayConfig: priority floor must be positive");
  }

  /// Linear anneal of beta2 over anneal_steps.
  double weight_exponent(std::size_t step) const {
    if (anneal_steps == 0) return weight_exponent_end;
    const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(anneal_steps));
    return weight_exponent_start + f * (weight_exponent_end - weight_exponent_start);
  }
};

/// Fixed-capacity ring of transitions stored as flat arrays.
class TransitionStore {
 public:
  TransitionStore(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim)
      : capacity_(capacity), obs_dim_(obs_dim), act_dim_(action_dim) {
    obs_.resize(capacity * obs_dim);
    next_obs_.resize(capacity * obs_dim);
    act_.resize(capacity * action_dim);
    reward_.resize(capacity);
    done_.resize(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return count_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return act_dim_; }

  /// Stores at the ring cursor and returns the slot used.
  std::size_t push(std::span<const double> obs, std::span<const double> action, double reward,
                   std::span<const double> next_obs, bool done) {
    if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || action.size() != act_dim_)
      throw DimensionError("replay: transition dimensions do not match the buffer");
    const std::size_t slot = cursor_;
    std::copy(obs.begin(), obs.end(), obs_.begin() + slot * obs_dim_);
    std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + slot * obs_dim_);
    std::copy(action.begin(), action.end(), act_.begin() + slot * act_dim_);
    reward_[slot] = reward;
    done_[slot] = done ? 1.0 : 0.0;
    cursor_ = (cursor_ + 1) % capacity_;
    count_ = std::min(count_ + 1, capacity_);
    return slot;
  }

  void gather(ReplayBatch& b) const {
    const std::size_t n = b.indices.size();
    b.obs.resize(n * obs_dim_);
    b.next_obs.resize(n * obs_dim_);
    b.action.resize(n * act_dim_);
    b.reward.resize(n);
    b.done.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t i = b.indices[j];
      std::copy_n(obs_.begin() + i * obs_dim_, obs_dim_, b.obs.begin() + j * obs_dim_);
      std::copy_n(next_obs_.begin() + i * obs_dim_, obs_dim_, b.next_obs.begin() + j * obs_dim_);
      std::copy_n(act_.begin() + i * act_dim_, act_dim_, b.action.begin() + j * act_dim_);
      b.reward[j] = reward_[i];
      b.done[j] = done_[i];
    }
  }

 private:
  std::size_t capacity_, obs_dim_, act_dim_;
  std::size_t cursor_ = 0, count_ = 0;
  std::vector<double> obs_, next_obs_, act_, reward_, done_;
};

/// Replay interface used by the trainer. Both implementations draw one
/// uniform number per sample, in order, from the caller's stream.
class Replay {
 public:
  virtual ~Replay() = default;
  virtual std::size_t push(std::span<const double> obs, std::span<const double> action, double reward,
                           std::span<const double> next_obs, bool done) = 0;
  virtual ReplayBatch sample(std::size_t batch, RngStream& rng, std::size_t step) = 0;
  virtual void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) = 0;
  virtual std::size_t size() const = 0;
};

/// Proportional prioritized replay with stratified sampling. Leaves hold
/// p^beta1 with p = |td| + eps; new samples enter at the largest priority seen.
class PrioritizedReplay final : public Replay {
 public:
  PrioritizedReplay(const ReplayConfig& cfg, std::size_t obs_dim, std::size_t action_dim)
      : cfg_(validated(cfg)), tree_(cfg.capacity), store_(tree_.leaf_count(), obs_dim, action_dim) {}

  const SumTree& tree() const { return tree_; }
  const ReplayConfig& config() const { return cfg_; }
  std::size_t size() const override { return store_.size(); }
  double max_priority() const { return max_priority_; }

  std::size_t push(std::span<const double> obs, std::span<const double> action, double reward,
                   std::span<const double> next_obs, bool done) override {
    const std::size_t slot = store_.push(obs, action, reward, next_obs, done);
    tree_.set(slot, std::pow(max_priority_, cfg_.priority_exponent));
    return slot;
  }

  /// Pushes with an explicit raw priority (floored at eps).
  std::size_t push(std::span<const double> obs, std::span<const double> action, double reward,
                   std::span<const double> next_obs, bool done, double priority) {
    const std::size_t slot = store_.push(obs, action, reward, next_obs, done);
    set_priority(slot, priority);
    return slot;
  }

  ReplayBatch sample(std::size_t batch, RngStream& rng, std::size_t step) override {
    const std::size_t count = store_.size();
    if (batch == 0 || count < batch) throw std::logic_error("PrioritizedReplay::sample: not enough stored transitions");
    const double total = tree_.total();
    const double segment = total / static_cast<double>(batch);
    const double beta2 = cfg_.weight_exponent(step);
    ReplayBatch b;
    b.indices.resize(batch);
    b.weights.resize(batch);
    double max_w = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const double mass = (static_cast<double>(i) + rng.uniform()) * segment;
      const std::size_t idx = std::min(tree_.find(mass), count - 1);
      b.indices[i] = idx;
      const double prob = tree_.leaf(idx) / total;
      b.weights[i] = std::pow(static_cast<double>(count) * prob, -beta2);
      max_w = std::max(max_w, b.weights[i]);
    }
    for (auto& w : b.weights) w /= max_w;
    store_.gather(b);
    return b;
  }

  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) override {
    if (indices.size() != td_errors.size()) throw DimensionError("update_priorities: one TD error per index");
    for (std::size_t j = 0; j < indices.size(); ++j) {
      if (indices[j] >= store_.size()) throw std::out_of_range("update_priorities: index not stored");
      set_priority(indices[j], std::abs(td_errors[j]) + cfg_.priority_floor);
    }
  }

 private:
  static const ReplayConfig& validated(const ReplayConfig& c) {
    c.validate();
    return c;
  }

  void set_priority(std::size_t slot, double p) {
    p = std::max(p, cfg_.priority_floor);
    max_priority_ = std::max(max_priority_, p);
    tree_.set(slot, std::pow(p, cfg_.priority_exponent));
  }

  ReplayConfig cfg_;
  SumTree tree_;
  TransitionStore store_;
  double max_priority_ = 1.0;
};

/// Uniform replay with the same stratified draw: sample i takes
/// floor((i + u) * count / batch).
class UniformReplay final : public Replay {
 public:
  UniformReplay(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim)
      : store_(std::bit_ceil(capacity), obs_dim, action_dim) {}

  std::size_t size() const override { return store_.size(); }

  std::size_t push(std::span<const double> obs, std::span<const double> action, double reward,
                   std::span<const double> next_obs, bool done) override {
    return store_.push(obs, action, reward, next_obs, done);
  }

  ReplayBatch sample(std::size_t batch, RngStream& rng, std::size_t) override {
    const std::size_t count = store_.size();
    if (batch == 0 || count < batch) throw std::logic_error("UniformReplay::sample: not enough stored transitions");
    const double segment = static_cast<double>(count) / static_cast<double>(batch);
    ReplayBatch b;
    b.indices.resize(batch);
    b.weights.assign(batch, 1.0);
    for (std::size_t i = 0; i < batch; ++i) {
      const double mass = (static_cast<double>(i) + rng.uniform()) * segment;
      b.indices[i] = std::min(static_cast<std::size_t>(mass), count - 1);
    }
    store_.gather(b);
    return b;
  }

  void update_priorities(std::span<const std::size_t>, std::span<const double>) override {}

 private:
  TransitionStore store_;
};

}  // namespace aris
