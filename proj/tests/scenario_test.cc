#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "noisecal/clustering.h"
#include "noisecal/error.h"
#include "noisecal/scenario.h"

namespace noisecal {
namespace {

ScenarioConfig small() {
  ScenarioConfig c;
  c.identities = 5;
  c.instances = 200;
  c.feature_dim = 8;
  return c;
}

TEST(ScenarioTest, ContaminationAndClutterCounts) {
  ScenarioConfig c = small();
  c.contamination = 0.1;
  c.clutter_rate = 0.15;
  EXPECT_EQ(c.contaminated_count(), 20u);
  EXPECT_EQ(c.clutter_count(), 30u);

  const SyntheticDataset data = generate_scenario(c);
  const auto& inst = data.train.instances;
  EXPECT_EQ(inst.size(), 230u);
  EXPECT_EQ(std::count_if(inst.begin(), inst.end(), [](auto& i) { return i.contaminated(); }),
            20);
  EXPECT_EQ(std::count_if(inst.begin(), inst.end(), [](auto& i) { return i.is_clutter(); }),
            30);
  EXPECT_EQ(data.heldout.instances.size(), 5u * c.heldout_per_identity);
  for (const auto& h : data.heldout.instances) EXPECT_FALSE(h.contaminated());
}

TEST(ScenarioTest, EveryIdentityAppears) {
  const SyntheticDataset data = generate_scenario(small());
  std::set<int> seen;
  for (const auto& i : data.train.instances) {
    if (!i.is_clutter()) seen.insert(i.identity);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(ScenarioTest, CentresAreSeparatedUnitVectors) {
  ScenarioConfig c = small();
  c.min_center_distance = 0.8;
  const SyntheticDataset data = generate_scenario(c);
  ASSERT_EQ(data.centers.size(), 5u);
  for (std::size_t a = 0; a < 5; ++a) {
    EXPECT_NEAR(l2_norm(data.centers[a]), 1.0, 1e-12);
    for (std::size_t b = a + 1; b < 5; ++b) {
      EXPECT_GE(cosine_distance(data.centers[a], data.centers[b]), 0.8);
    }
  }
}

TEST(ScenarioTest, MapsAndBoxesAreConsistent) {
  const ScenarioConfig c = small();
  const SyntheticDataset data = generate_scenario(c);
  const double extent = static_cast<double>(c.grid) * c.cell_size;
  for (const auto& img : data.train.images) {
    EXPECT_EQ(img.map.height(), c.grid);
    EXPECT_EQ(img.map.channels(), c.channels());
    EXPECT_LE(img.instances.size(), c.instances_per_image);
    for (std::size_t idx : img.instances) {
      const auto& inst = data.train.instances[idx];
      EXPECT_EQ(inst.image_id, img.image_id);
      EXPECT_TRUE(inst.pseudo_box.valid());
      EXPECT_GE(inst.pseudo_box.x1, 0.0);
      EXPECT_LE(inst.pseudo_box.x2, extent);
    }
    for (double v : img.map.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(ScenarioTest, DeterministicInSeed) {
  const SyntheticDataset a = generate_scenario(small());
  const SyntheticDataset b = generate_scenario(small());
  ASSERT_EQ(a.train.images.size(), b.train.images.size());
  for (std::size_t i = 0; i < a.train.images.size(); ++i) {
    const auto va = a.train.images[i].map.values();
    const auto vb = b.train.images[i].map.values();
    ASSERT_TRUE(std::equal(va.begin(), va.end(), vb.begin(), vb.end()));
  }
  ScenarioConfig other = small();
  other.seed = 8;
  const SyntheticDataset c = generate_scenario(other);
  EXPECT_NE(a.train.instances[0].latent, c.train.instances[0].latent);
}

TEST(ScenarioTest, ValidationRejectsBadValues) {
  auto expect_bad = [](auto mutate) {
    ScenarioConfig c = small();
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  expect_bad([](ScenarioConfig& c) { c.identities = 0; });
  expect_bad([](ScenarioConfig& c) { c.contamination = 1.0; });
  expect_bad([](ScenarioConfig& c) { c.clutter_rate = -0.1; });
  expect_bad([](ScenarioConfig& c) { c.contrast_min = 0.0; });
  expect_bad([](ScenarioConfig& c) { c.scene_bias = -1.0; });
  expect_bad([](ScenarioConfig& c) { c.identities = 300; });
  expect_bad([](ScenarioConfig& c) {
    c.identities = 1;
    c.contamination = 0.2;
  });
}

}  // namespace
}  // namespace noisecal
