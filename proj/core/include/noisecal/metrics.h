#ifndef NOISECAL_METRICS_H_
#define NOISECAL_METRICS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "noisecal/clustering.h"
#include "noisecal/proxy_memory.h"

namespace noisecal {

// Per-epoch calibration report. Only the synthetic harness can fill it, since
// it needs hidden ground truth.
struct CalibrationMetrics {
  std::size_t epoch = 0;
  double purity = 0.0;              // [0, 1]
  double ari = 0.0;                 // [-1, 1]
  double retrieval_accuracy = 0.0;  // [0, 1]
  double mean_loss = 0.0;
  double filtered_clutter_rate = 0.0;     // clutter activations zeroed by the filter
  double foreground_zero_rate = 0.0;      // identity activations zeroed by the filter
  std::size_t num_clusters = 0;
  std::size_t clustered = 0;  // instances with a cluster label
  std::size_t proxy_storage = 0;  // values held by the dictionary (K * D)
};

// sum_k max_g |cluster_k n identity_g| / (number of clustered instances).
// Noise labels are ignored. Clutter (negative truth) counts as clustered but
// never as a majority identity. Returns 0 when nothing is clustered.
double cluster_purity(std::span<const int> labels, std::span<const int> truth);

// Adjusted Rand index from the contingency table. Every noise label, and
// every clutter (negative) truth entry, is its own singleton. Returns 1 when
// both partitions are trivially equal (a single element, or no pairs to
// disagree on).
double adjusted_rand_index(std::span<const int> labels, std::span<const int> truth);

// Majority ground-truth identity of each cluster (lowest identity on ties),
// clutter excluded; -1 for a cluster with no identity members.
std::vector<int> proxy_identities(std::span<const int> labels,
                                  std::span<const int> truth,
                                  std::size_t num_clusters);

// Fraction of queries whose most similar proxy (largest dot product, lowest
// id on ties) carries the query's identity.
double retrieval_accuracy(const ProxyDictionary& memory,
                          std::span<const int> proxy_identity,
                          std::span<const InstanceFeature> queries,
                          std::span<const int> query_truth);

// Fills purity, ari, retrieval_accuracy, cluster counts and proxy storage.
CalibrationMetrics compute_metrics(const ClusterAssignment& assignment,
                                   std::span<const int> truth,
                                   const ProxyDictionary& memory,
                                   std::span<const InstanceFeature> heldout,
                                   std::span<const int> heldout_truth);

}  // namespace noisecal

#endif  // NOISECAL_METRICS_H_
