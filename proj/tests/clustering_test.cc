#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "noisecal/clustering.h"
#include "noisecal/error.h"
#include "oracles.h"

namespace noisecal {
namespace {

InstanceFeature at_angle(double degrees) {
  const double r = degrees * M_PI / 180.0;
  return {{std::cos(r), std::sin(r)}, false};
}

std::vector<InstanceFeature> random_points(std::mt19937_64& rng, std::size_t n,
                                           std::size_t dim, std::size_t centres) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> c(centres, std::vector<double>(dim));
  for (auto& v : c) {
    for (double& x : v) x = g(rng);
  }
  std::vector<InstanceFeature> pts(n);
  std::uniform_int_distribution<std::size_t> pick(0, centres - 1);
  for (auto& p : pts) {
    p.values = c[pick(rng)];
    for (double& x : p.values) x += 0.35 * g(rng);
  }
  return pts;
}

TEST(CosineTest, DistanceAndNormalization) {
  EXPECT_NEAR(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{0, 3}), 1.0, 1e-15);
  EXPECT_NEAR(cosine_distance(std::vector<double>{2, 0}, std::vector<double>{-1, 0}), 2.0, 1e-15);
  EXPECT_THROW(cosine_distance(std::vector<double>{0, 0}, std::vector<double>{1, 0}),
               DegenerateInputError);
  const InstanceFeature unit = l2_normalize({{3.0, 4.0}, false});
  EXPECT_TRUE(unit.normalized);
  EXPECT_DOUBLE_EQ(unit.values[0], 0.6);
  EXPECT_THROW(l2_normalize({{0.0, 0.0}, false}), DegenerateInputError);
}

TEST(DbscanTest, TwoGroupsAndNoise) {
  std::vector<InstanceFeature> pts = {at_angle(0),   at_angle(2),   at_angle(4),
                                      at_angle(90),  at_angle(92),  at_angle(94),
                                      at_angle(200)};
  const ClusterAssignment a = dbscan(pts, {0.01, 3});
  EXPECT_EQ(a.num_clusters, 2);
  EXPECT_EQ(a.labels, (std::vector<int>{0, 0, 0, 1, 1, 1, kNoise}));
}

TEST(DbscanTest, SelfCountsTowardMinSamples) {
  const std::vector<InstanceFeature> pts = {at_angle(0), at_angle(1)};
  EXPECT_EQ(dbscan(pts, {0.01, 2}).num_clusters, 1);
  EXPECT_EQ(dbscan(pts, {0.01, 3}).num_clusters, 0);
}

TEST(DbscanTest, EpsIsInclusive) {
  const std::vector<InstanceFeature> pts = {{{1.0, 0.0}, true}, {{0.0, 1.0}, true}};
  // Orthogonal unit vectors sit at distance exactly 1.
  EXPECT_EQ(dbscan(pts, {1.0, 2}).num_clusters, 1);
  EXPECT_EQ(dbscan(pts, {0.999, 2}).num_clusters, 0);
}

TEST(DbscanTest, BorderPointGoesToFirstCluster) {
  // Point 4 (12 deg) has the cores at 6 and 18 deg as its only neighbours.
  const std::vector<InstanceFeature> pts = {at_angle(18), at_angle(20), at_angle(22),
                                            at_angle(24), at_angle(12), at_angle(0),
                                            at_angle(2),  at_angle(4),  at_angle(6)};
  const double eps = 1.0 - std::cos(6.5 * M_PI / 180.0);
  const ClusterAssignment a = dbscan(pts, {eps, 4});
  ASSERT_EQ(a.num_clusters, 2);
  EXPECT_FALSE(a.core[4]);
  EXPECT_TRUE(a.core[0]);
  EXPECT_TRUE(a.core[8]);
  EXPECT_EQ(a.labels[4], 0);
  EXPECT_EQ(a.labels[8], 1);
}

TEST(DbscanTest, MatchesNaiveReference) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_points(rng, 60 + 7 * trial, 4, 5);
    const DbscanConfig cfg{0.08 + 0.01 * (trial % 5), 3 + static_cast<std::size_t>(trial % 3)};
    const ClusterAssignment a = dbscan(pts, cfg);

    std::vector<std::vector<double>> raw;
    for (const auto& p : pts) raw.push_back(p.values);
    const auto ref = oracle::naive_dbscan(raw, cfg.eps, cfg.min_samples);

    std::vector<int> core_labels(pts.size(), -1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ASSERT_EQ(a.core[i], ref.core[i]) << "trial " << trial << " point " << i;
      if (a.core[i]) core_labels[i] = a.labels[i];
    }
    EXPECT_TRUE(oracle::same_partition(ref.component, core_labels)) << "trial " << trial;

    // Non-core points: noise iff no core neighbour, else one neighbour's cluster.
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (ref.core[i]) continue;
      bool reachable = false;
      bool label_ok = false;
      for (std::size_t j : ref.neighbours[i]) {
        if (!ref.core[j]) continue;
        reachable = true;
        label_ok = label_ok || a.labels[j] == a.labels[i];
      }
      EXPECT_EQ(a.labels[i] == kNoise, !reachable);
      if (reachable) EXPECT_TRUE(label_ok);
    }
  }
}

TEST(DbscanTest, RejectsBadInput) {
  EXPECT_THROW(dbscan({}, {}), UsageError);
  const std::vector<InstanceFeature> mixed = {{{1.0, 0.0}, false}, {{1.0}, false}};
  EXPECT_THROW(dbscan(mixed, {}), UsageError);
  EXPECT_THROW((DbscanConfig{0.0, 4}.validate()), ConfigError);
  EXPECT_THROW((DbscanConfig{0.5, 0}.validate()), ConfigError);
}

TEST(ClusterMeansTest, AveragesMembersOnly) {
  const std::vector<InstanceFeature> pts = {
      {{1.0, 0.0}, false}, {{3.0, 2.0}, false}, {{9.0, 9.0}, false}};
  ClusterAssignment a;
  a.labels = {0, 0, kNoise};
  a.core = {true, true, false};
  a.num_clusters = 1;
  const auto means = cluster_means(pts, a);
  ASSERT_EQ(means.size(), 1u);
  EXPECT_DOUBLE_EQ(means[0][0], 2.0);
  EXPECT_DOUBLE_EQ(means[0][1], 1.0);
  EXPECT_EQ(a.members(0), (std::vector<std::size_t>{0, 1}));
}

}  // namespace
}  // namespace noisecal
