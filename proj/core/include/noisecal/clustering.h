#ifndef NOISECAL_CLUSTERING_H_
#define NOISECAL_CLUSTERING_H_

#include <cstddef>
#include <span>
#include <vector>

namespace noisecal {

// Instance embedding. `normalized` records that values has unit L2 norm.
struct InstanceFeature {
  std::vector<double> values;
  bool normalized = false;

  std::size_t dim() const { return values.size(); }
};

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

// Unit-norm copy. Throws DegenerateInputError for a zero (or non-finite)
// vector.
InstanceFeature l2_normalize(const InstanceFeature& feature);
std::vector<double> l2_normalized(std::span<const double> v);

// 1 - u.v / (|u| |v|). Throws DegenerateInputError if either vector is zero.
double cosine_distance(std::span<const double> u, std::span<const double> v);

struct DbscanConfig {
  double eps = 0.6;  // cosine-distance radius, inclusive
  std::size_t min_samples = 4;  // neighbourhood size for a core point, self included

  void validate() const;
};

inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<int> labels;  // kNoise or 0..num_clusters-1
  std::vector<bool> core;
  int num_clusters = 0;

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> members(int cluster) const;
};

/// DBSCAN under cosine distance.
///
/// Points are scanned in input order. Each unlabelled core point opens the
/// next cluster id and expands breadth-first; a border point belongs to the
/// first cluster that reaches it. Points reachable from no core point are
/// kNoise. Throws UsageError on empty input or mismatched dimensions.
ClusterAssignment dbscan(std::span<const InstanceFeature> features,
                         const DbscanConfig& config);

// Mean of each cluster's members, noise excluded. Index k holds cluster k.
std::vector<std::vector<double>> cluster_means(
    std::span<const InstanceFeature> features,
    const ClusterAssignment& assignment);

}  // namespace noisecal

#endif  // NOISECAL_CLUSTERING_H_
