#include <gtest/gtest.h>

#include <random>

#include "noisecal/error.h"
#include "noisecal/metrics.h"
#include "oracles.h"

namespace noisecal {
namespace {

TEST(PurityTest, MajorityOverClusteredPoints) {
  const std::vector<int> labels = {0, 0, 0, 1, 1, kNoise, kNoise};
  const std::vector<int> truth = {5, 5, 6, 6, 6, 7, 5};
  EXPECT_DOUBLE_EQ(cluster_purity(labels, truth), 4.0 / 5.0);
  EXPECT_EQ(cluster_purity(std::vector<int>{kNoise}, std::vector<int>{1}), 0.0);
  EXPECT_THROW(cluster_purity(std::vector<int>{0}, std::vector<int>{1, 2}), UsageError);
}

TEST(AriTest, IdenticalPartitionsScoreOne) {
  const std::vector<int> a = {0, 0, 1, 1, 2};
  const std::vector<int> renamed = {4, 4, 9, 9, 1};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, renamed), 1.0);
}

TEST(AriTest, NoiseLabelsAreSingletons) {
  // All-noise labels against all-singleton truth agree perfectly.
  const std::vector<int> noise = {kNoise, kNoise, kNoise, kNoise};
  const std::vector<int> singles = {0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(noise, singles), 1.0);
  // Noise is not one big cluster: two noise points never form a pair.
  const std::vector<int> truth = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(std::vector<int>{kNoise, kNoise, 1, 1}, truth),
                   oracle::pair_ari({-1, -1, 1, 1}, truth));
}

TEST(AriTest, MatchesPairCountingOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + trial;
    std::uniform_int_distribution<int> lab(-1, 4), tru(-1, 3);
    std::vector<int> labels(n), truth(n);
    for (auto& v : labels) v = lab(rng);
    for (auto& v : truth) v = tru(rng);
    EXPECT_NEAR(adjusted_rand_index(labels, truth), oracle::pair_ari(labels, truth), 1e-12)
        << "trial " << trial;
  }
}

TEST(RetrievalTest, NearestProxyIdentity) {
  ProxyDictionary memory(2, 0.05, 0.2);
  memory.append(std::vector<double>{1.0, 0.0});
  memory.append(std::vector<double>{0.0, 1.0});
  const std::vector<int> proxy_id = {3, 8};
  const std::vector<InstanceFeature> queries = {
      {{0.9, 0.1}, false}, {{0.2, 0.8}, false}, {{0.7, 0.3}, false}};
  const std::vector<int> truth = {3, 8, 8};
  EXPECT_DOUBLE_EQ(retrieval_accuracy(memory, proxy_id, queries, truth), 2.0 / 3.0);
}

TEST(ProxyIdentityTest, MajorityWithLowestOnTies) {
  const std::vector<int> labels = {0, 0, 0, 1, 1, kNoise};
  const std::vector<int> truth = {4, 2, 4, 7, 6, 1};
  EXPECT_EQ(proxy_identities(labels, truth, 2), (std::vector<int>{4, 6}));
}

}  // namespace
}  // namespace noisecal
