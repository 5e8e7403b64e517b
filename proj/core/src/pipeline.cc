#include "noisecal/pipeline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>

#include "noisecal/error.h"
#include "noisecal/parallel.h"

namespace noisecal {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose,
                       std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kFilterInitStream = 1;
constexpr std::uint64_t kBatchOrderStream = 2;

struct ZeroCounts {
  std::size_t clutter_active = 0;
  std::size_t clutter_zeroed = 0;
  std::size_t foreground_active = 0;
  std::size_t foreground_zeroed = 0;
};

}  // namespace

void TrainingConfig::validate() const {
  if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("training: learning_rate must be >= 0");
  }
  if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
  if (threads < 1) throw ConfigError("training: threads must be >= 1");
}

CprConfig PipelineConfig::effective_cpr() const {
  CprConfig out = cpr;
  if (!cpr_enabled) {
    out.smoothing = 0.0;
    out.momentum = 1.0;
  }
  return out;
}

void PipelineConfig::validate() const {
  scenario.validate();
  dbscan.validate();
  cpr.validate();
  filter.validate();
  training.validate();
}

Extraction extract_features(const InstanceSet& set, const FilterStack& filter,
                            double cell_size, std::size_t threads) {
  Extraction out;
  out.features.resize(set.instances.size());
  out.kept.assign(set.instances.size(), false);
  std::vector<ZeroCounts> counts(set.images.size());

  parallel_for(set.images.size(), threads, [&](std::size_t i) {
    const SyntheticImage& image = set.images[i];
    const FeatureMap filtered = filter.forward(image.map).output;
    ZeroCounts& zc = counts[i];
    for (std::size_t idx : image.instances) {
      const SyntheticInstance& inst = set.instances[idx];
      const auto cells =
          roi_cells(inst.pseudo_box, image.map.height(), image.map.width(), cell_size);
      RoiEmbedding e = roi_embedding(filtered, cells);
      if (e.norm > kMinEmbeddingNorm) {
        out.features[idx] = {std::move(e.unit), true};
        out.kept[idx] = true;
      }

      // Filter action is scored on the painted region, not the pseudo box.
      const auto painted =
          roi_cells(inst.true_box, image.map.height(), image.map.width(), cell_size);
      std::size_t& active = inst.is_clutter() ? zc.clutter_active : zc.foreground_active;
      std::size_t& zeroed = inst.is_clutter() ? zc.clutter_zeroed : zc.foreground_zeroed;
      for (std::size_t c = 0; c < image.map.channels(); ++c) {
        const auto before = image.map.channel(c);
        const auto after = filtered.channel(c);
        for (std::size_t cell : painted) {
          if (before[cell] == 0.0) continue;
          ++active;
          if (after[cell] == 0.0) ++zeroed;
        }
      }
    }
  });

  ZeroCounts total;
  for (const auto& zc : counts) {
    total.clutter_active += zc.clutter_active;
    total.clutter_zeroed += zc.clutter_zeroed;
    total.foreground_active += zc.foreground_active;
    total.foreground_zeroed += zc.foreground_zeroed;
  }
  auto rate = [](std::size_t zeroed, std::size_t active) {
    return active == 0 ? 0.0 : static_cast<double>(zeroed) / static_cast<double>(active);
  };
  out.clutter_zero_rate = rate(total.clutter_zeroed, total.clutter_active);
  out.foreground_zero_rate = rate(total.foreground_zeroed, total.foreground_active);
  return out;
}

TrainingState initial_state(const PipelineConfig& config) {
  config.validate();
  auto rng = stream(config.seed, kFilterInitStream);
  return TrainingState{
      FilterStack(config.scenario.channels(), config.filter, rng()), std::nullopt, {}, 0};
}

CalibrationMetrics run_epoch(const SyntheticDataset& data, TrainingState& state,
                             const PipelineConfig& config,
                             PseudoLabeledDataset* labels_out) {
  const CprConfig cpr = config.effective_cpr();
  const double cell_size = data.config.cell_size;
  const std::size_t threads = config.training.threads;
  const InstanceSet& train = data.train;

  // Phase one: re-extract, cluster, rebuild the dictionary.
  const Extraction extraction = extract_features(train, state.filter, cell_size, threads);
  PseudoLabeledDataset labels;
  labels.epoch = state.epoch + 1;
  for (std::size_t i = 0; i < train.instances.size(); ++i) {
    if (!extraction.kept[i]) continue;
    const auto& inst = train.instances[i];
    labels.instance_index.push_back(i);
    labels.observations.push_back({inst.image_id, inst.pseudo_box, extraction.features[i]});
  }
  if (labels.observations.empty()) {
    throw PipelineError("epoch " + std::to_string(labels.epoch) +
                        ": the filter removed every instance");
  }
  std::vector<InstanceFeature> features;
  features.reserve(labels.observations.size());
  for (const auto& obs : labels.observations) features.push_back(obs.feature);
  labels.assignment = dbscan(features, config.dbscan);
  if (labels.assignment.num_clusters == 0) {
    throw PipelineError("epoch " + std::to_string(labels.epoch) + ": DBSCAN found no clusters among " +
                        std::to_string(features.size()) + " instances (eps=" +
                        std::to_string(config.dbscan.eps) + ", min_samples=" +
                        std::to_string(config.dbscan.min_samples) + ")");
  }
  ProxyDictionary memory =
      offline_reinit(labels.observations, labels.assignment, state.snapshot, cpr);

  // Phase two: batched contrastive loss, filter step, online updates.
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < labels.observations.size(); ++j) {
    if (labels.assignment.labels[j] >= 0) order.push_back(j);
  }
  auto rng = stream(config.seed, kBatchOrderStream, labels.epoch);
  std::shuffle(order.begin(), order.end(), rng);

  const bool train_filter = labels.epoch > config.training.frozen_epochs &&
                            config.training.learning_rate > 0.0 &&
                            state.filter.config().enabled();
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  const std::size_t batch = config.training.batch_size;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    StackGradients grads = state.filter.zero_gradients();
    std::size_t contributors = 0;
    std::vector<std::pair<std::size_t, std::vector<double>>> updates;
    std::unordered_map<int, StackForward> forwards;

    for (std::size_t b = start; b < end; ++b) {
      const std::size_t j = order[b];
      const auto k = static_cast<std::size_t>(labels.assignment.labels[j]);
      if (!train_filter) {
        // Frozen filter: the phase-one embedding is exactly what a fresh
        // forward pass would give.
        const auto& unit = labels.observations[j].feature.values;
        loss_sum += contrastive_loss(unit, k, memory).loss;
        ++loss_count;
        updates.emplace_back(k, unit);
        continue;
      }
      const auto& inst = train.instances[labels.instance_index[j]];
      const auto& image = train.images[static_cast<std::size_t>(inst.image_id)];
      auto it = forwards.find(inst.image_id);
      if (it == forwards.end()) {
        it = forwards.emplace(inst.image_id, state.filter.forward(image.map)).first;
      }
      const auto cells =
          roi_cells(inst.pseudo_box, image.map.height(), image.map.width(), cell_size);
      const RoiEmbedding e = roi_embedding(it->second.output, cells);
      if (!(e.norm > kMinEmbeddingNorm)) continue;
      const ContrastiveResult res = contrastive_loss(e.unit, k, memory);
      loss_sum += res.loss;
      ++loss_count;
      const FeatureMap up = roi_embedding_backward(image.map, e, res.grad, cells);
      grads.accumulate(state.filter.backward(it->second, up));
      ++contributors;
      updates.emplace_back(k, e.unit);
    }
    if (train_filter && contributors > 0) {
      grads.scale(1.0 / static_cast<double>(contributors));
      state.filter.step(grads, config.training.learning_rate);
    }
    for (const auto& [k, unit] : updates) memory.online_update(unit, k);
  }

  // Metrics against the hidden ground truth.
  std::vector<int> truth;
  truth.reserve(labels.instance_index.size());
  for (std::size_t idx : labels.instance_index) truth.push_back(train.instances[idx].identity);
  const Extraction heldout = extract_features(data.heldout, state.filter, cell_size, threads);
  std::vector<int> heldout_truth;
  for (const auto& inst : data.heldout.instances) heldout_truth.push_back(inst.identity);

  CalibrationMetrics metrics = compute_metrics(labels.assignment, truth, memory,
                                               heldout.features, heldout_truth);
  metrics.epoch = labels.epoch;
  metrics.mean_loss = loss_count == 0 ? 0.0 : loss_sum / static_cast<double>(loss_count);
  metrics.filtered_clutter_rate = extraction.clutter_zero_rate;
  metrics.foreground_zero_rate = extraction.foreground_zero_rate;

  state.memory = std::move(memory);
  state.snapshot = labels.observations;
  state.epoch = labels.epoch;
  if (labels_out) *labels_out = std::move(labels);
  return metrics;
}

ExperimentResult run_experiment(const PipelineConfig& config) {
  config.validate();
  ScenarioConfig scenario = config.scenario;
  scenario.seed = config.seed;
  const SyntheticDataset data = generate_scenario(scenario);
  ExperimentResult result{{}, initial_state(config)};
  for (std::size_t e = 0; e < config.training.epochs; ++e) {
    result.epochs.push_back(run_epoch(data, result.state, config));
  }
  return result;
}

}  // namespace noisecal
