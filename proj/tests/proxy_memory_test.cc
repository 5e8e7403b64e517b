#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "noisecal/error.h"
#include "noisecal/proxy_memory.h"

namespace noisecal {
namespace {

std::vector<double> unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = g(rng);
  return l2_normalized(v);
}

struct Clustered {
  std::vector<Observation> obs;
  std::vector<InstanceFeature> features;
  ClusterAssignment assignment;
};

// Three clusters of unit features in images 0..n/4, boxes on a 4-slot row.
Clustered make_clustered(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Clustered c;
  c.assignment.num_clusters = 3;
  for (std::size_t i = 0; i < n; ++i) {
    Observation o;
    o.image_id = static_cast<int>(i / 4);
    const double x = 20.0 * static_cast<double>(i % 4);
    o.box = make_box(x, 0, x + 16, 32);
    o.feature = {unit(rng, 5), true};
    c.obs.push_back(o);
    c.features.push_back(o.feature);
    const int label = i % 7 == 6 ? kNoise : static_cast<int>(i % 3);
    c.assignment.labels.push_back(label);
    c.assignment.core.push_back(label != kNoise);
  }
  return c;
}

TEST(ContrastiveTest, TwoProxyLossIsLog1pOfExpMinusTwenty) {
  ProxyDictionary memory(2, 0.05, 0.2);
  memory.append(std::vector<double>{1.0, 0.0});
  memory.append(std::vector<double>{0.0, 1.0});
  const auto res = contrastive_loss(std::vector<double>{1.0, 0.0}, 0, memory);
  EXPECT_GT(res.loss, 0.0);
  EXPECT_NEAR(res.loss, std::log1p(std::exp(-20.0)), 1e-22);
}

TEST(ContrastiveTest, GradientIsWeightedProxyDifference) {
  std::mt19937_64 rng(2);
  ProxyDictionary memory(4, 0.3, 0.2);
  for (int k = 0; k < 3; ++k) memory.append(unit(rng, 4));
  const auto f = unit(rng, 4);
  const auto res = contrastive_loss(f, 1, memory);

  std::vector<double> logits(3);
  double z = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    logits[k] = dot(f, memory.proxy(k)) / 0.3;
    z += std::exp(logits[k]);
  }
  EXPECT_NEAR(res.loss, std::log(z) - logits[1], 1e-13);
  for (std::size_t d = 0; d < 4; ++d) {
    double g = -memory.proxy(1)[d];
    for (std::size_t k = 0; k < 3; ++k) g += std::exp(logits[k]) / z * memory.proxy(k)[d];
    EXPECT_NEAR(res.grad[d], g / 0.3, 1e-13);
  }
}

TEST(ContrastiveTest, RejectsBadPositive) {
  ProxyDictionary memory(2, 0.05, 0.2);
  memory.append(std::vector<double>{1.0, 0.0});
  EXPECT_THROW(contrastive_loss(std::vector<double>{1.0, 0.0}, 1, memory), UsageError);
}

TEST(OnlineUpdateTest, MovesTowardFeatureAndRenormalizes) {
  ProxyDictionary memory(2, 0.05, 0.5);
  memory.append(std::vector<double>{1.0, 0.0});
  memory.online_update(std::vector<double>{0.0, 1.0}, 0);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(memory.proxy(0)[0], r, 1e-15);
  EXPECT_NEAR(memory.proxy(0)[1], r, 1e-15);
  EXPECT_THROW(memory.online_update(std::vector<double>{0.0, 1.0}, 1), UsageError);
  EXPECT_THROW(memory.online_update(std::vector<double>{1.0}, 0), UsageError);
}

TEST(OnlineUpdateTest, ZeroMomentumLeavesTableUntouched) {
  std::mt19937_64 rng(3);
  ProxyDictionary memory(6, 0.05, 0.0);
  memory.append(unit(rng, 6));
  const std::vector<double> before(memory.storage().begin(), memory.storage().end());
  memory.online_update(unit(rng, 6), 0);
  EXPECT_EQ(std::vector<double>(memory.storage().begin(), memory.storage().end()), before);
}

TEST(OnlineUpdateTest, MomentumStepRecurrence) {
  const std::vector<double> f = {0.3, -1.2, 2.0};
  std::vector<double> c = {1.0, 0.5, -0.25};
  const std::vector<double> c0 = c;
  for (int t = 1; t <= 20; ++t) {
    c = momentum_step(c, f, 0.2);
    for (std::size_t d = 0; d < 3; ++d) {
      EXPECT_NEAR(c[d] - f[d], std::pow(0.8, t) * (c0[d] - f[d]), 1e-12);
    }
  }
}

TEST(InitProxiesTest, NormalizedClusterMeans) {
  const Clustered c = make_clustered(40, 5);
  const ProxyDictionary memory = init_proxies(c.features, c.assignment, {});
  ASSERT_EQ(memory.size(), 3u);
  const auto means = cluster_means(c.features, c.assignment);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto expected = l2_normalized(means[k]);
    for (std::size_t d = 0; d < 5; ++d) EXPECT_NEAR(memory.proxy(k)[d], expected[d], 1e-15);
  }
  EXPECT_EQ(memory.storage_size(), 3u * 5u);
}

TEST(InitProxiesTest, RejectsNoClusters) {
  Clustered c = make_clustered(8, 1);
  c.assignment.labels.assign(8, kNoise);
  c.assignment.num_clusters = 0;
  EXPECT_THROW(init_proxies(c.features, c.assignment, {}), DegenerateInputError);
}

TEST(OfflineReinitTest, ZeroSmoothingIsBitIdenticalToInit) {
  const Clustered cur = make_clustered(60, 7);
  const Clustered prev = make_clustered(60, 8);
  CprConfig cfg;
  cfg.smoothing = 0.0;
  const ProxyDictionary a = offline_reinit(cur.obs, cur.assignment, prev.obs, cfg);
  const ProxyDictionary b = init_proxies(cur.features, cur.assignment, cfg);
  ASSERT_EQ(a.storage_size(), b.storage_size());
  EXPECT_EQ(0, std::memcmp(a.storage().data(), b.storage().data(),
                           a.storage_size() * sizeof(double)));
}

TEST(OfflineReinitTest, EmptySnapshotIsBitIdenticalToInit) {
  const Clustered cur = make_clustered(60, 9);
  const ProxyDictionary a = offline_reinit(cur.obs, cur.assignment, {}, {});
  const ProxyDictionary b = init_proxies(cur.features, cur.assignment, {});
  EXPECT_EQ(0, std::memcmp(a.storage().data(), b.storage().data(),
                           a.storage_size() * sizeof(double)));
}

TEST(OfflineReinitTest, SmoothsOnlyMatchesInTheSameImage) {
  // One cluster of two members; member 0's box reappears in the same image,
  // member 1's only in a different image.
  std::vector<Observation> cur(2), prev(2);
  cur[0] = {0, make_box(0, 0, 10, 10), {{1.0, 0.0}, true}};
  cur[1] = {1, make_box(0, 0, 10, 10), {{1.0, 0.0}, true}};
  prev[0] = {0, make_box(0, 0, 10, 10), {{0.0, 1.0}, true}};
  prev[1] = {5, make_box(0, 0, 10, 10), {{0.0, 1.0}, true}};
  ClusterAssignment a;
  a.labels = {0, 0};
  a.core = {true, true};
  a.num_clusters = 1;
  CprConfig cfg;
  cfg.smoothing = 0.5;
  const ProxyDictionary memory = offline_reinit(cur, a, prev, cfg);
  // mean of (0.5, 0.5) and (1, 0) = (0.75, 0.25)
  const auto expected = l2_normalized(std::vector<double>{0.75, 0.25});
  EXPECT_NEAR(memory.proxy(0)[0], expected[0], 1e-15);
  EXPECT_NEAR(memory.proxy(0)[1], expected[1], 1e-15);
}

TEST(DictionaryTest, MergeKeepsDisjointIdRanges) {
  std::mt19937_64 rng(4);
  ProxyDictionary src(3, 0.05, 0.2), tgt(3, 0.05, 0.2);
  src.append(unit(rng, 3));
  src.append(unit(rng, 3));
  tgt.append(unit(rng, 3));
  const std::size_t offset = tgt.merge(src);
  EXPECT_EQ(offset, 1u);
  EXPECT_EQ(tgt.size(), 3u);
  EXPECT_EQ(tgt.proxy(2)[0], src.proxy(1)[0]);
}

TEST(DictionaryTest, FromTableRequiresUnitRows) {
  EXPECT_NO_THROW(ProxyDictionary::from_table(2, 0.05, 0.2, {0.6, 0.8, 1.0, 0.0}));
  EXPECT_THROW(ProxyDictionary::from_table(2, 0.05, 0.2, {0.6, 0.9}), UsageError);
  EXPECT_THROW(ProxyDictionary::from_table(2, 0.05, 0.2, {1.0, 0.0, 1.0}), UsageError);
}

TEST(DictionaryTest, SaveLoadRoundTripsExactly) {
  std::mt19937_64 rng(6);
  ProxyDictionary memory(7, 0.07, 0.3);
  for (int k = 0; k < 4; ++k) memory.append(unit(rng, 7));
  const auto stem = std::filesystem::temp_directory_path() / "noisecal_dict_test";
  save_dictionary(memory, stem);
  const ProxyDictionary back = load_dictionary(stem);
  EXPECT_EQ(back.size(), 4u);
  EXPECT_EQ(back.dim(), 7u);
  EXPECT_EQ(back.temperature(), 0.07);
  EXPECT_EQ(back.momentum(), 0.3);
  EXPECT_EQ(std::vector<double>(back.storage().begin(), back.storage().end()),
            std::vector<double>(memory.storage().begin(), memory.storage().end()));
  std::filesystem::remove(stem.string() + ".tensor");
  std::filesystem::remove(stem.string() + ".json");
}

TEST(CprConfigTest, ValidatesRanges) {
  EXPECT_THROW((CprConfig{1.5, 0.2, 0.05}.validate()), ConfigError);
  EXPECT_THROW((CprConfig{0.2, -0.1, 0.05}.validate()), ConfigError);
  EXPECT_THROW((CprConfig{0.2, 0.2, 0.0}.validate()), ConfigError);
  EXPECT_NO_THROW((CprConfig{0.0, 1.0, 0.01}.validate()));
}

}  // namespace
}  // namespace noisecal
