#ifndef NOISECAL_PIPELINE_H_
#define NOISECAL_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "noisecal/clustering.h"
#include "noisecal/filter_stack.h"
#include "noisecal/metrics.h"
#include "noisecal/proxy_memory.h"
#include "noisecal/scenario.h"

namespace noisecal {

struct TrainingConfig {
  std::size_t epochs = 5;
  std::size_t frozen_epochs = 1;  // leading epochs with the filter frozen
  double learning_rate = 0.05;
  std::size_t batch_size = 4;
  std::size_t threads = 1;

  void validate() const;
};

struct PipelineConfig {
  ScenarioConfig scenario;
  DbscanConfig dbscan;
  CprConfig cpr;
  bool cpr_enabled = true;  // off: m = 0 and momentum = 1 (plain re-init)
  FilterStackConfig filter;
  TrainingConfig training;
  std::uint64_t seed = 7;  // drives scenario, filter init and batch order

  // CPR parameters actually used, after the enable switch.
  CprConfig effective_cpr() const;
  void validate() const;
};

// Features extracted through the current filter, one slot per instance of an
// InstanceSet. Instances whose pooled embedding the filter zeroed out have
// kept[i] == false and an empty feature.
struct Extraction {
  std::vector<InstanceFeature> features;
  std::vector<bool> kept;
  double clutter_zero_rate = 0.0;
  double foreground_zero_rate = 0.0;
};

Extraction extract_features(const InstanceSet& set, const FilterStack& filter,
                            double cell_size, std::size_t threads = 1);

// Pseudo-labels produced by phase one of an epoch, for the kept instances.
struct PseudoLabeledDataset {
  std::size_t epoch = 0;
  std::vector<std::size_t> instance_index;  // observation -> InstanceSet index
  std::vector<Observation> observations;
  ClusterAssignment assignment;
};

struct TrainingState {
  FilterStack filter;
  std::optional<ProxyDictionary> memory;
  EpochSnapshot snapshot;
  std::size_t epoch = 0;  // epochs completed
};

TrainingState initial_state(const PipelineConfig& config);

/// One alternating epoch.
///
/// Phase one re-extracts every training instance through the filter stack,
/// clusters the surviving embeddings with DBSCAN and rebuilds the proxy
/// dictionary with offline_reinit against the previous snapshot. Phase two
/// walks the clustered instances in seeded batch order: for each batch the
/// contrastive loss and filter gradients are computed against a fixed
/// dictionary, an SGD step is taken (unless the epoch is frozen), and the
/// online proxy updates are then applied in batch order. Throws PipelineError
/// when clustering finds no clusters.
CalibrationMetrics run_epoch(const SyntheticDataset& data, TrainingState& state,
                             const PipelineConfig& config,
                             PseudoLabeledDataset* labels_out = nullptr);

struct ExperimentResult {
  std::vector<CalibrationMetrics> epochs;
  TrainingState state;
};

// generate_scenario followed by config.training.epochs calls to run_epoch.
ExperimentResult run_experiment(const PipelineConfig& config);

}  // namespace noisecal

#endif  // NOISECAL_PIPELINE_H_
