#include "noisecal/clustering.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "noisecal/error.h"

namespace noisecal {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::vector<double> l2_normalized(std::span<const double> v) {
  const double norm = l2_norm(v);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateInputError("cannot normalize a zero or non-finite vector");
  }
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

InstanceFeature l2_normalize(const InstanceFeature& feature) {
  return {l2_normalized(feature.values), true};
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) {
    throw DegenerateInputError("cosine distance of a zero vector");
  }
  return 1.0 - dot(u, v) / (nu * nv);
}

void DbscanConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ConfigError("dbscan eps must be a positive finite number");
  }
  if (min_samples < 1) throw ConfigError("dbscan min_samples must be >= 1");
}

std::vector<std::size_t> ClusterAssignment::members(int cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cluster) out.push_back(i);
  }
  return out;
}

namespace {

constexpr int kUnassigned = -2;

// Unit rows packed into one buffer so the neighbour scan is a dense dot
// product sweep.
std::vector<double> pack_unit_rows(std::span<const InstanceFeature> features,
                                   std::size_t dim) {
  std::vector<double> rows(features.size() * dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (f.dim() != dim) {
      throw UsageError("dbscan: feature " + std::to_string(i) + " has dimension " +
                       std::to_string(f.dim()) + ", expected " +
                       std::to_string(dim));
    }
    const auto unit = f.normalized ? f.values : l2_normalized(f.values);
    std::copy(unit.begin(), unit.end(), rows.begin() + i * dim);
  }
  return rows;
}

}  // namespace

ClusterAssignment dbscan(std::span<const InstanceFeature> features,
                         const DbscanConfig& config) {
  config.validate();
  if (features.empty()) throw UsageError("dbscan: no features");
  const std::size_t n = features.size();
  const std::size_t dim = features.front().dim();
  if (dim == 0) throw UsageError("dbscan: zero-dimensional features");
  const auto rows = pack_unit_rows(features, dim);

  // Symmetric neighbour lists (self included), built once.
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbours[i].push_back(i);
    const double* a = rows.data() + i * dim;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* b = rows.data() + j * dim;
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += a[d] * b[d];
      if (1.0 - s <= config.eps) {
        neighbours[i].push_back(j);
        neighbours[j].push_back(i);
      }
    }
  }
  // Each list is in ascending index order by construction.

  ClusterAssignment out;
  out.labels.assign(n, kUnassigned);
  out.core.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    out.core[i] = neighbours[i].size() >= config.min_samples;
  }

  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != kUnassigned || !out.core[i]) continue;
    const int id = out.num_clusters++;
    out.labels[i] = id;
    frontier.push_back(i);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t q : neighbours[p]) {
        if (out.labels[q] != kUnassigned) continue;
        out.labels[q] = id;
        if (out.core[q]) frontier.push_back(q);
      }
    }
  }
  for (int& label : out.labels) {
    if (label == kUnassigned) label = kNoise;
  }
  return out;
}

std::vector<std::vector<double>> cluster_means(
    std::span<const InstanceFeature> features,
    const ClusterAssignment& assignment) {
  if (assignment.labels.size() != features.size()) {
    throw UsageError("cluster_means: assignment size does not match features");
  }
  const std::size_t k = static_cast<std::size_t>(assignment.num_clusters);
  std::vector<std::vector<double>> sums(k);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const int label = assignment.labels[i];
    if (label < 0) continue;
    if (label >= assignment.num_clusters) {
      throw UsageError("cluster_means: label out of range");
    }
    auto& sum = sums[static_cast<std::size_t>(label)];
    const auto& v = features[i].values;
    if (sum.empty()) {
      sum.assign(v.size(), 0.0);
    } else if (sum.size() != v.size()) {
      throw UsageError("cluster_means: mixed feature dimensions");
    }
    for (std::size_t d = 0; d < v.size(); ++d) sum[d] += v[d];
    ++counts[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      throw UsageError("cluster_means: cluster " + std::to_string(c) +
                       " has no members");
    }
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (double& x : sums[c]) x *= inv;
  }
  return sums;
}

}  // namespace noisecal
