#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "aris/replay.hpp"

namespace aris {
namespace {

std::vector<double> obs_of(double x) { return {x, -x}; }
std::vector<double> act_of(double x) { return {0.5 * x}; }

void push_n(Replay& r, int n, int start = 0) {
  for (int i = start; i < start + n; ++i) r.push(obs_of(i), act_of(i), i, obs_of(i + 1), false);
}

double leaf_sum(const SumTree& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.leaf_count(); ++i) s += t.leaf(i);
  return s;
}

void expect_tree_consistent(const SumTree& t) {
  const auto& n = t.nodes();
  for (std::size_t i = 1; i < t.leaf_count(); ++i) ASSERT_EQ(n[i], n[2 * i] + n[2 * i + 1]) << "node " << i;
}

ReplayConfig small_config(std::size_t capacity, double beta1 = 0.6) {
  ReplayConfig c;
  c.capacity = capacity;
  c.batch_size = 2;
  c.priority_exponent = beta1;
  return c;
}

TEST(SumTree, CapacityRoundsUpToPowerOfTwo) {
  EXPECT_EQ(SumTree(5).leaf_count(), 8u);
  EXPECT_EQ(SumTree(8).leaf_count(), 8u);
  EXPECT_THROW(SumTree(0), std::invalid_argument);
}

TEST(SumTree, FindWalksCumulativeIntervals) {
  SumTree t(4);
  t.set(0, 1.0);
  t.set(1, 2.0);
  t.set(2, 0.0);
  t.set(3, 3.0);
  EXPECT_EQ(t.total(), 6.0);
  EXPECT_EQ(t.find(0.0), 0u);
  EXPECT_EQ(t.find(0.99), 0u);
  EXPECT_EQ(t.find(1.0), 1u);
  EXPECT_EQ(t.find(2.99), 1u);
  EXPECT_EQ(t.find(3.0), 3u);
  EXPECT_EQ(t.find(6.5), 3u);
}

TEST(SumTree, RejectsInvalidValues) {
  SumTree t(2);
  EXPECT_THROW(t.set(2, 1.0), std::out_of_range);
  EXPECT_THROW(t.set(0, -1.0), std::invalid_argument);
  EXPECT_THROW(t.set(0, std::nan("")), std::invalid_argument);
}

TEST(PrioritizedReplay, FirstPushSetsRoot) {
  PrioritizedReplay r(small_config(8, 1.0), 2, 1);
  r.push(obs_of(0), act_of(0), 0.0, obs_of(1), false, 2.5);
  EXPECT_EQ(r.tree().total(), 2.5);
}

TEST(PrioritizedReplay, NewSamplesEnterAtMaxPriority) {
  PrioritizedReplay r(small_config(8, 1.0), 2, 1);
  push_n(r, 1);
  EXPECT_EQ(r.tree().leaf(0), 1.0);
  const std::vector<std::size_t> idx{0};
  const std::vector<double> td{4.0};
  r.update_priorities(idx, td);
  push_n(r, 1, 1);
  EXPECT_DOUBLE_EQ(r.tree().leaf(1), 4.0 + r.config().priority_floor);
}

TEST(PrioritizedReplay, RingOverwritesOldest) {
  PrioritizedReplay r(small_config(4), 2, 1);
  push_n(r, 5);
  EXPECT_EQ(r.size(), 4u);
  RngStream rng(1);
  bool saw_new = false;
  for (int t = 0; t < 50; ++t) {
    const ReplayBatch b = r.sample(2, rng, 0);
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_NE(b.reward[j], 0.0) << "oldest transition should be gone";
      if (b.indices[j] == 0) {
        EXPECT_EQ(b.reward[j], 4.0);
        saw_new = true;
      }
    }
  }
  EXPECT_TRUE(saw_new);
}

TEST(PrioritizedReplay, BatchCarriesStoredTransitions) {
  PrioritizedReplay r(small_config(8), 2, 1);
  push_n(r, 6);
  RngStream rng(2);
  const ReplayBatch b = r.sample(2, rng, 0);
  for (std::size_t j = 0; j < 2; ++j) {
    const double x = static_cast<double>(b.indices[j]);
    EXPECT_EQ(b.obs[2 * j], x);
    EXPECT_EQ(b.obs[2 * j + 1], -x);
    EXPECT_EQ(b.next_obs[2 * j], x + 1);
    EXPECT_EQ(b.action[j], 0.5 * x);
    EXPECT_EQ(b.reward[j], x);
    EXPECT_EQ(b.done[j], 0.0);
  }
}

TEST(PrioritizedReplay, UnderfullSampleThrows) {
  PrioritizedReplay r(small_config(8), 2, 1);
  push_n(r, 1);
  RngStream rng(3);
  EXPECT_THROW(r.sample(2, rng, 0), std::logic_error);
}

TEST(PrioritizedReplay, ZeroTdIsFlooredAtEpsilon) {
  PrioritizedReplay r(small_config(8, 1.0), 2, 1);
  push_n(r, 2);
  const std::vector<std::size_t> idx{1};
  const std::vector<double> td{0.0};
  r.update_priorities(idx, td);
  EXPECT_EQ(r.tree().leaf(1), r.config().priority_floor);
  EXPECT_EQ(r.tree().leaf(0), 1.0);
}

TEST(PrioritizedReplay, UpdateRejectsBadInput) {
  PrioritizedReplay r(small_config(8), 2, 1);
  push_n(r, 2);
  const std::vector<std::size_t> idx{5};
  const std::vector<double> td{1.0};
  EXPECT_THROW(r.update_priorities(idx, td), std::out_of_range);
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(r.update_priorities(idx, two), DimensionError);
}

TEST(PrioritizedReplay, EqualPrioritiesGiveUnitWeights) {
  PrioritizedReplay r(small_config(16), 2, 1);
  push_n(r, 10);
  RngStream rng(4);
  const ReplayBatch b = r.sample(5, rng, 0);
  for (double w : b.weights) EXPECT_DOUBLE_EQ(w, 1.0);
}

TEST(PrioritizedReplay, ZeroWeightExponentGivesUnitWeights) {
  ReplayConfig c = small_config(16, 1.0);
  c.weight_exponent_start = c.weight_exponent_end = 0.0;
  PrioritizedReplay r(c, 2, 1);
  RngStream rng(5);
  for (int i = 0; i < 12; ++i) r.push(obs_of(i), act_of(i), i, obs_of(i), false, 0.1 + rng.uniform());
  for (int t = 0; t < 20; ++t)
    for (double w : r.sample(4, rng, 0).weights) ASSERT_EQ(w, 1.0);
}

TEST(PrioritizedReplay, WeightsAtMostOneAndMatchFormula) {
  ReplayConfig c = small_config(16, 0.7);
  PrioritizedReplay r(c, 2, 1);
  RngStream rng(6);
  for (int i = 0; i < 12; ++i) r.push(obs_of(i), act_of(i), i, obs_of(i), false, 0.05 + rng.uniform());
  const std::size_t step = 30000;
  const double beta2 = c.weight_exponent(step);
  for (int t = 0; t < 50; ++t) {
    const ReplayBatch b = r.sample(4, rng, step);
    std::vector<double> raw;
    for (std::size_t i : b.indices) raw.push_back(std::pow(12.0 * r.tree().leaf(i) / r.tree().total(), -beta2));
    const double m = *std::max_element(raw.begin(), raw.end());
    for (std::size_t j = 0; j < raw.size(); ++j) {
      ASSERT_LE(b.weights[j], 1.0);
      ASSERT_NEAR(b.weights[j], raw[j] / m, 1e-14);
    }
  }
}

TEST(ReplayConfig, WeightExponentAnneals) {
  ReplayConfig c;
  c.anneal_steps = 100;
  EXPECT_DOUBLE_EQ(c.weight_exponent(0), 0.4);
  EXPECT_DOUBLE_EQ(c.weight_exponent(50), 0.7);
  EXPECT_DOUBLE_EQ(c.weight_exponent(100), 1.0);
  EXPECT_DOUBLE_EQ(c.weight_exponent(1000), 1.0);
}

TEST(ReplayConfig, ValidationRejectsBadValues) {
  ReplayConfig c;
  c.priority_exponent = -0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ReplayConfig{};
  c.weight_exponent_end = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ReplayConfig{};
  c.priority_floor = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(PrioritizedReplay, TreeStaysConsistentUnderRandomOperations) {
  PrioritizedReplay r(small_config(64, 0.6), 2, 1);
  RngStream rng(7);
  for (int op = 0; op < 20000; ++op) {
    if (r.size() < 2 || rng.uniform() < 0.5) {
      r.push(obs_of(op), act_of(op), op, obs_of(op), false);
    } else {
      std::vector<std::size_t> idx{rng() % r.size(), rng() % r.size()};
      std::vector<double> td{rng.uniform(-5, 5), rng.uniform(-5, 5)};
      r.update_priorities(idx, td);
    }
    if (op % 997 == 0) expect_tree_consistent(r.tree());
  }
  expect_tree_consistent(r.tree());
  EXPECT_NEAR(r.tree().total(), leaf_sum(r.tree()), 1e-9 * r.tree().total());
}

TEST(PrioritizedReplay, UnchangedIndicesKeepPriorities) {
  PrioritizedReplay r(small_config(8, 1.0), 2, 1);
  for (int i = 0; i < 4; ++i) r.push(obs_of(i), act_of(i), i, obs_of(i), false, 1.0 + i);
  const std::vector<std::size_t> idx{2};
  const std::vector<double> td{9.0};
  r.update_priorities(idx, td);
  EXPECT_EQ(r.tree().leaf(0), 1.0);
  EXPECT_EQ(r.tree().leaf(1), 2.0);
  EXPECT_EQ(r.tree().leaf(3), 4.0);
}

TEST(PrioritizedReplay, StratifiedMarginalsMatchPriorities) {
  // Eight items with distinct priorities; batch of 4 so each draw covers several strata.
  PrioritizedReplay r(small_config(8, 1.0), 2, 1);
  const std::vector<double> p{1, 2, 3, 4, 5, 6, 7, 8};
  for (int i = 0; i < 8; ++i) r.push(obs_of(i), act_of(i), i, obs_of(i), false, p[i]);
  RngStream rng(8);
  std::vector<double> hits(8, 0.0);
  const int draws = 250000;
  for (int t = 0; t < draws; ++t)
    for (std::size_t i : r.sample(4, rng, 0).indices) hits[i] += 1.0;
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(hits[i] / (4.0 * draws), p[i] / 36.0, 0.01 * p[i] / 36.0) << "item " << i;
}

TEST(UniformReplay, IndicesCoverStoredRangeEvenly) {
  UniformReplay r(10, 2, 1);
  push_n(r, 10);
  RngStream rng(9);
  std::vector<double> hits(10, 0.0);
  for (int t = 0; t < 20000; ++t) {
    const ReplayBatch b = r.sample(5, rng, 0);
    for (double w : b.weights) ASSERT_EQ(w, 1.0);
    for (std::size_t i : b.indices) {
      ASSERT_LT(i, 10u);
      hits[i] += 1.0;
    }
  }
  for (double h : hits) EXPECT_NEAR(h / 100000.0, 0.1, 0.005);
}

TEST(UniformReplay, MatchesPrioritizedWithFlatPriorities) {
  ReplayConfig c = small_config(32, 0.0);
  c.weight_exponent_start = c.weight_exponent_end = 0.0;
  PrioritizedReplay per(c, 2, 1);
  UniformReplay uni(32, 2, 1);
  push_n(per, 23);
  push_n(uni, 23);
  RngStream a(10), b(10);
  for (int t = 0; t < 500; ++t) {
    const ReplayBatch x = per.sample(8, a, t), y = uni.sample(8, b, t);
    ASSERT_EQ(x.indices, y.indices);
    ASSERT_EQ(x.weights, y.weights);
    ASSERT_EQ(x.obs, y.obs);
  }
}

}  // namespace
}  // namespace aris
