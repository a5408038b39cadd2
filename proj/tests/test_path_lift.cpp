#include "rpac/path_lift.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <iostream>

#include "support/nets.hpp"

namespace rpac {
namespace {

using testing::Rng;

// Counts paths by plain recursion from every source.
std::uint64_t brute_count(const DagNetwork& net, int v) {
  if (net.kind(v) == NeuronKind::output) return 1;
  std::uint64_t n = 0;
  for (std::size_t e : net.out_edges(v)) n += brute_count(net, net.edge(e).dst);
  return n;
}

std::uint64_t brute_count(const DagNetwork& net) {
  std::uint64_t n = 0;
  for (std::size_t v = 0; v < net.num_neurons(); ++v) {
    const NeuronKind k = net.kind(static_cast<int>(v));
    if (k == NeuronKind::input || k == NeuronKind::constant_one) n += brute_count(net, static_cast<int>(v));
  }
  return n;
}

DagNetwork small_random_net(Rng& rng, std::uint64_t max_paths) {
  for (;;) {
    DagNetwork net = testing::random_net(rng, {.max_hidden = 12, .extra_edge_prob = 0.2});
    if (count_paths(net) <= max_paths) return net;
  }
}

TEST(EnumeratePaths, HandCounts) {
  EXPECT_EQ(enumerate_paths(testing::chain_net()).size(), 1u);
  EXPECT_EQ(enumerate_paths(testing::lfcn({2, 2, 2})).size(), 8u);
  EXPECT_EQ(enumerate_paths(testing::diamond_net()).size(), 2u);
  EXPECT_EQ(count_paths(testing::lfcn({2, 2, 2})), 8u);
  EXPECT_EQ(count_paths(testing::lfcn({3, 4, 5, 2})), 3u * 4u * 5u * 2u);
}

TEST(EnumeratePaths, DiamondContents) {
  const DagNetwork net = testing::diamond_net();
  const PathSet ps = enumerate_paths(net);
  const std::vector<std::vector<int>> expected{{0, 1, 3}, {0, 2, 3}};
  EXPECT_EQ(ps.neurons, expected);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ASSERT_EQ(ps.edges[i].size() + 1, ps.neurons[i].size());
    for (std::size_t k = 0; k < ps.edges[i].size(); ++k) {
      EXPECT_EQ(net.edge(ps.edges[i][k]).src, ps.neurons[i][k]);
      EXPECT_EQ(net.edge(ps.edges[i][k]).dst, ps.neurons[i][k + 1]);
    }
  }
}

TEST(EnumeratePaths, LexicographicAndValid) {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const DagNetwork net = small_random_net(rng, 1000);
    const PathSet ps = enumerate_paths(net);
    EXPECT_TRUE(std::is_sorted(ps.neurons.begin(), ps.neurons.end()));
    EXPECT_EQ(std::adjacent_find(ps.neurons.begin(), ps.neurons.end()), ps.neurons.end());
    for (const auto& path : ps.neurons) {
      const NeuronKind first = net.kind(path.front());
      EXPECT_TRUE(first == NeuronKind::input || first == NeuronKind::constant_one);
      EXPECT_EQ(net.kind(path.back()), NeuronKind::output);
      for (std::size_t k = 0; k + 1 < path.size(); ++k) EXPECT_TRUE(net.find_edge(path[k], path[k + 1]).has_value());
    }
  }
}

TEST(EnumeratePaths, CountMatchesDynamicProgramAndRecursion) {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const DagNetwork net = small_random_net(rng, 5000);
    const std::uint64_t dp = count_paths(net);
    EXPECT_EQ(dp, brute_count(net));
    EXPECT_EQ(enumerate_paths(net).size(), dp);
  }
}

TEST(EnumeratePaths, ExplosionIsReportedWithCount) {
  const DagNetwork net = testing::lfcn({4, 4, 4, 4, 4});
  EXPECT_EQ(count_paths(net), 1024u);
  try {
    enumerate_paths(net, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PathExplosion);
    EXPECT_NE(e.detail().find("1024"), std::string::npos);
  }
  // Deep wide nets saturate the counter instead of overflowing.
  std::vector<int> widths(40, 10);
  EXPECT_EQ(count_paths(testing::lfcn(widths)), UINT64_MAX);
}

TEST(Lift, WorkedExample) {
  const DagNetwork net = testing::chain_net();
  const PathSet ps = enumerate_paths(net);
  const LiftedPoint a = lift(net, ps, {{3.0, 3.0}});
  const LiftedPoint b = lift(net, ps, {{0.0, 0.0}});
  EXPECT_EQ(a.phi, std::vector<double>{9.0});
  EXPECT_EQ(a.signs, (std::vector<int>{1, 1}));
  EXPECT_EQ(b.signs, (std::vector<int>{0, 0}));
  EXPECT_EQ(weight_l1_distance({{3.0, 3.0}}, {{0.0, 0.0}}), 6.0);
  EXPECT_EQ(lifted_l1_distance(a, b), 11.0);
  EXPECT_EQ(lifted_l1_distance(a, a), 0.0);
}

TEST(Lift, ZeroEdgeAnnihilatesPath) {
  const DagNetwork net = testing::chain_net();
  const LiftedPoint a = lift(net, enumerate_paths(net), {{0.0, -5.0}});
  EXPECT_EQ(a.phi, std::vector<double>{0.0});
  EXPECT_EQ(a.signs, (std::vector<int>{0, -1}));
}

TEST(Lift, SizeMismatch) {
  const DagNetwork net = testing::chain_net();
  const LiftedPoint a = lift(net, enumerate_paths(net), {{1.0, 1.0}});
  const DagNetwork d = testing::diamond_net();
  const LiftedPoint b = lift(d, enumerate_paths(d), {{1.0, 1.0, 1.0, 1.0}});
  EXPECT_THROW(lifted_l1_distance(a, b), Error);
  EXPECT_THROW(weight_l1_distance({{1.0}}, {{1.0, 2.0}}), Error);
}

TEST(Lift, InvariantUnderRescaling) {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    const DagNetwork net = small_random_net(rng, 1000);
    const PathSet ps = enumerate_paths(net);
    const WeightAssignment w = testing::random_weights(rng, net);
    const RescalingVector lambda = testing::random_rescaling(rng, net, -3, 3);
    const LiftedPoint a = lift(net, ps, w);
    const LiftedPoint b = lift(net, ps, apply_rescaling(net, lambda, w));
    EXPECT_EQ(a.signs, b.signs);
    for (std::size_t i = 0; i < a.phi.size(); ++i) {
      EXPECT_LE(std::abs(a.phi[i] - b.phi[i]), 1e-12 * std::abs(a.phi[i]));
    }
  }
}

TEST(Lift, DistanceUnchangedByCommonRescaling) {
  Rng rng(64);
  for (int trial = 0; trial < 50; ++trial) {
    const DagNetwork net = small_random_net(rng, 1000);
    const PathSet ps = enumerate_paths(net);
    const WeightAssignment w = testing::random_weights(rng, net);
    const WeightAssignment v = testing::random_weights(rng, net);
    const RescalingVector lambda = testing::random_rescaling(rng, net, -3, 3);
    const double base = lifted_l1_distance(lift(net, ps, w), lift(net, ps, v));
    const double scaled = lifted_l1_distance(lift(net, ps, apply_rescaling(net, lambda, w)),
                                             lift(net, ps, apply_rescaling(net, lambda, v)));
    EXPECT_NEAR(scaled, base, 1e-11 * std::max(1.0, base));
  }
}

TEST(Lift, EqualLiftsGiveEqualFunctions) {
  Rng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    const DagNetwork net = small_random_net(rng, 1000);
    const PathSet ps = enumerate_paths(net);
    const WeightAssignment w = testing::random_weights(rng, net);
    const WeightAssignment w2 = apply_rescaling(net, testing::random_rescaling(rng, net, -2, 2), w);
    const LiftedPoint a = lift(net, ps, w), b = lift(net, ps, w2);
    ASSERT_EQ(a.signs, b.signs);
    for (int k = 0; k < 100; ++k) {
      const auto x = testing::random_input(rng, net);
      const auto y1 = forward(net, w, x);
      const auto y2 = forward(net, w2, x);
      for (std::size_t o = 0; o < y1.size(); ++o) EXPECT_NEAR(y1[o], y2[o], 1e-9 * (1.0 + std::abs(y1[o])));
    }
  }
}

// Two-sample Kolmogorov-Smirnov comparison of the first phi coordinate under
// Q and under a rescaled Q. Reported only.
TEST(Lift, DistributionalSpotCheckAdvisory) {
  Rng rng(66);
  const DagNetwork net = testing::diamond_net();
  const PathSet ps = enumerate_paths(net);
  const DiagGaussian q = testing::random_posterior(rng, net.num_edges());
  const DiagGaussian rq = pushforward_rescaling(net, testing::random_rescaling(rng, net, -1, 1), q);
  const std::size_t m = 10'000;
  std::vector<double> a, b;
  for (std::size_t i = 0; i < m; ++i) {
    a.push_back(lift(net, ps, sample_one(q, 1, i)).phi[0]);
    b.push_back(lift(net, ps, sample_one(rq, 2, i)).phi[0]);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < m && j < m) {
    if (a[i] <= b[j]) ++i; else ++j;
    d = std::max(d, std::abs(static_cast<double>(i) - static_cast<double>(j)) / static_cast<double>(m));
  }
  const double critical = 1.628 * std::sqrt(2.0 / static_cast<double>(m));
  std::cout << "KS statistic " << d << " (critical " << critical << " at 0.01)"
            << (d > critical ? " -- rejected" : "") << "\n";
  RecordProperty("ks_statistic", std::to_string(d));
  EXPECT_TRUE(std::isfinite(d));
}

}  // namespace
}  // namespace rpac
