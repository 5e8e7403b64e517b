#include <gtest/gtest.h>

#include "commands.h"
#include "noisecal/error.h"
#include "noisecal/filter_stack.h"
#include "noisecal/pipeline.h"

namespace noisecal {
namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.scenario.identities = 5;
  c.scenario.instances = 160;
  c.scenario.feature_dim = 8;
  c.scenario.background_level = 0.0;
  c.scenario.scene_bias = 2.5;
  c.dbscan.eps = 0.2;
  c.cpr.temperature = 0.2;
  c.training.epochs = 3;
  c.training.learning_rate = 0.3;
  return c;
}

void expect_same(const CalibrationMetrics& a, const CalibrationMetrics& b) {
  EXPECT_EQ(a.purity, b.purity);
  EXPECT_EQ(a.ari, b.ari);
  EXPECT_EQ(a.retrieval_accuracy, b.retrieval_accuracy);
  EXPECT_EQ(a.mean_loss, b.mean_loss);
  EXPECT_EQ(a.num_clusters, b.num_clusters);
  EXPECT_EQ(a.filtered_clutter_rate, b.filtered_clutter_rate);
}

TEST(PipelineTest, NoiselessScenarioClustersPerfectly) {
  PipelineConfig c = small_config();
  c.scenario.feature_noise = 0.0;
  c.scenario.box_noise = 0.0;
  c.scenario.contamination = 0.0;
  c.scenario.clutter_rate = 0.0;
  c.scenario.scene_bias = 0.0;
  c.training.epochs = 1;
  for (bool filtered : {false, true}) {
    c.filter.perception_driven = filtered;
    c.filter.self_calibrating = filtered;
    const ExperimentResult r = run_experiment(c);
    EXPECT_EQ(r.epochs[0].purity, 1.0) << "filter " << filtered;
    EXPECT_NEAR(r.epochs[0].ari, 1.0, 1e-12) << "filter " << filtered;
    EXPECT_EQ(r.epochs[0].retrieval_accuracy, 1.0) << "filter " << filtered;
    EXPECT_EQ(r.epochs[0].num_clusters, 5u) << "filter " << filtered;
  }
}

TEST(PipelineTest, FrozenEpochReproducesClustering) {
  const ExperimentResult r = run_experiment(small_config());
  ASSERT_EQ(r.epochs.size(), 3u);
  EXPECT_EQ(r.epochs[0].purity, r.epochs[1].purity);
  EXPECT_EQ(r.epochs[0].ari, r.epochs[1].ari);
  EXPECT_EQ(r.epochs[0].num_clusters, r.epochs[1].num_clusters);
}

TEST(PipelineTest, NoDriftWithoutAnyUpdates) {
  PipelineConfig c = small_config();
  c.cpr.momentum = 0.0;
  c.cpr.smoothing = 0.0;
  c.training.learning_rate = 0.0;
  c.training.frozen_epochs = 0;
  const ExperimentResult r = run_experiment(c);
  const TrainingState fresh = initial_state(c);
  for (std::size_t e = 1; e < r.epochs.size(); ++e) {
    EXPECT_EQ(r.epochs[e].purity, r.epochs[0].purity);
    EXPECT_EQ(r.epochs[e].ari, r.epochs[0].ari);
    EXPECT_EQ(r.epochs[e].retrieval_accuracy, r.epochs[0].retrieval_accuracy);
    // Batch order is reshuffled per epoch, so only the summation order differs.
    EXPECT_NEAR(r.epochs[e].mean_loss, r.epochs[0].mean_loss, 1e-12);
  }
  const auto& trained = r.state.filter.stages();
  for (std::size_t s = 0; s < trained.size(); ++s) {
    EXPECT_EQ(trained[s].filter.lambda, fresh.filter.stages()[s].filter.lambda);
    EXPECT_EQ(trained[s].mlp.w1, fresh.filter.stages()[s].mlp.w1);
  }
}

TEST(PipelineTest, ProxyStorageIsClustersTimesDim) {
  const ExperimentResult r = run_experiment(small_config());
  for (const auto& m : r.epochs) EXPECT_EQ(m.proxy_storage, m.num_clusters * 8u);
}

TEST(PipelineTest, ThreadCountDoesNotChangeResults) {
  PipelineConfig one = small_config();
  PipelineConfig many = one;
  many.training.threads = 3;
  const auto a = run_experiment(one).epochs;
  const auto b = run_experiment(many).epochs;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t e = 0; e < a.size(); ++e) expect_same(a[e], b[e]);
}

TEST(PipelineTest, AllOffAblationRowIsTheNaiveBaseline) {
  cli::RunConfig rc;
  rc.pipeline = small_config();
  const auto rows = cli::run_ablation(rc);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows.back().spec.name, "all");
  const auto& none = rows[4];
  ASSERT_EQ(none.spec.name, "none");

  PipelineConfig naive = small_config();
  naive.filter.perception_driven = false;
  naive.filter.self_calibrating = false;
  naive.cpr_enabled = false;
  const auto baseline = run_experiment(naive).epochs;
  ASSERT_EQ(baseline.size(), none.epochs.size());
  for (std::size_t e = 0; e < baseline.size(); ++e) expect_same(baseline[e], none.epochs[e]);
}

TEST(PipelineTest, NoClustersIsAPipelineError) {
  PipelineConfig c = small_config();
  c.dbscan.eps = 1e-9;
  c.dbscan.min_samples = 50;
  EXPECT_THROW(run_experiment(c), PipelineError);
}

TEST(PipelineTest, ValidationNamesTheProblem) {
  PipelineConfig c = small_config();
  c.training.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.training.frozen_epochs = 9;
  EXPECT_NO_THROW(c.validate());
  c.filter.stages = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(FilterStackTest, DisabledStackIsIdentity) {
  FilterStackConfig cfg;
  cfg.perception_driven = false;
  cfg.self_calibrating = false;
  const FilterStack stack(4, cfg, 1);
  FeatureMap map(2, 2, 4, 0.0);
  map.at(1, 0, 2) = 3.0;
  const StackForward fwd = stack.forward(map);
  EXPECT_TRUE(fwd.caches.empty());
  EXPECT_TRUE(std::equal(fwd.output.values().begin(), fwd.output.values().end(),
                         map.values().begin()));
}

TEST(FilterStackTest, StepClampsLambda) {
  FilterStack stack(2, {}, 3);
  StackGradients g = stack.zero_gradients();
  g.stages[0].d_lambda = {-10.0, 10.0};
  stack.step(g, 1.0);
  EXPECT_EQ(stack.stages()[0].filter.lambda[0], 1.0);
  EXPECT_EQ(stack.stages()[0].filter.lambda[1], 0.0);
}

TEST(FilterStackTest, SelfCalibratingOffPinsLambda) {
  FilterStackConfig cfg;
  cfg.self_calibrating = false;
  FilterStack stack(2, cfg, 3);
  StackGradients g = stack.zero_gradients();
  g.stages[0].d_lambda = {-10.0, -10.0};
  stack.step(g, 1.0);
  EXPECT_EQ(stack.stages()[0].filter.lambda[0], 0.0);
}

TEST(RoiTest, CellsPoolingAndSignedEmbedding) {
  // 4x4 grid of 8 px cells; box covers centres of rows 0-1, cols 1-2.
  const auto cells = roi_cells(make_box(6, 0, 22, 14), 4, 4, 8.0);
  EXPECT_EQ(cells, (std::vector<std::size_t>{1, 2, 5, 6}));
  // A sliver covering no centre falls back to the nearest cell.
  EXPECT_EQ(roi_cells(make_box(9, 9, 10, 10), 4, 4, 8.0), (std::vector<std::size_t>{5}));

  FeatureMap map(4, 4, 2, 0.0);
  map.channel(0)[1] = 4.0;
  map.channel(1)[6] = 2.0;
  const auto pooled = roi_pool(map, cells);
  EXPECT_EQ(pooled, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(signed_embedding(pooled), (std::vector<double>{0.5}));

  const RoiEmbedding e = roi_embedding(map, cells);
  EXPECT_EQ(e.unit, (std::vector<double>{1.0}));
  EXPECT_DOUBLE_EQ(e.norm, 0.5);
}

}  // namespace
}  // namespace noisecal
