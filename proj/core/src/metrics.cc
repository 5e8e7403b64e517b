#include "noisecal/metrics.h"

#include <map>
#include <utility>

#include "noisecal/error.h"

namespace noisecal {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw UsageError(std::string(what) + ": size mismatch");
}

double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double cluster_purity(std::span<const int> labels, std::span<const int> truth) {
  check_sizes(labels.size(), truth.size(), "cluster_purity");
  std::map<int, std::map<int, std::size_t>> table;
  std::size_t clustered = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    ++clustered;
    if (truth[i] >= 0) ++table[labels[i]][truth[i]];
  }
  if (clustered == 0) return 0.0;
  std::size_t majority = 0;
  for (const auto& [cluster, counts] : table) {
    std::size_t best = 0;
    for (const auto& [identity, n] : counts) best = std::max(best, n);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(clustered);
}

double adjusted_rand_index(std::span<const int> labels, std::span<const int> truth) {
  check_sizes(labels.size(), truth.size(), "adjusted_rand_index");
  const std::size_t n = labels.size();
  // Noise labels and clutter truth become unique ids past every real label.
  auto singletons = [n](std::span<const int> in) {
    std::vector<long long> out(n);
    long long next = 0;
    for (int l : in) next = std::max<long long>(next, l + 1LL);
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] >= 0 ? in[i] : next++;
    return out;
  };
  const std::vector<long long> predicted = singletons(labels);
  const std::vector<long long> actual = singletons(truth);

  std::map<std::pair<long long, long long>, std::size_t> cells;
  std::map<long long, std::size_t> rows;
  std::map<long long, std::size_t> cols;
  for (std::size_t i = 0; i < n; ++i) {
    ++cells[{predicted[i], actual[i]}];
    ++rows[predicted[i]];
    ++cols[actual[i]];
  }
  double index = 0.0, row_sum = 0.0, col_sum = 0.0;
  for (const auto& [key, count] : cells) index += pairs(static_cast<double>(count));
  for (const auto& [key, count] : rows) row_sum += pairs(static_cast<double>(count));
  for (const auto& [key, count] : cols) col_sum += pairs(static_cast<double>(count));
  const double total = pairs(static_cast<double>(n));
  if (total == 0.0) return 1.0;
  const double expected = row_sum * col_sum / total;
  const double max_index = 0.5 * (row_sum + col_sum);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<int> proxy_identities(std::span<const int> labels,
                                  std::span<const int> truth,
                                  std::size_t num_clusters) {
  check_sizes(labels.size(), truth.size(), "proxy_identities");
  std::vector<std::map<int, std::size_t>> counts(num_clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    if (static_cast<std::size_t>(labels[i]) >= num_clusters) {
      throw UsageError("proxy_identities: label out of range");
    }
    if (truth[i] >= 0) ++counts[static_cast<std::size_t>(labels[i])][truth[i]];
  }
  std::vector<int> out(num_clusters, -1);
  for (std::size_t k = 0; k < num_clusters; ++k) {
    std::size_t best = 0;
    for (const auto& [identity, n] : counts[k]) {
      if (n > best) {
        best = n;
        out[k] = identity;
      }
    }
  }
  return out;
}

double retrieval_accuracy(const ProxyDictionary& memory,
                          std::span<const int> proxy_identity,
                          std::span<const InstanceFeature> queries,
                          std::span<const int> query_truth) {
  check_sizes(queries.size(), query_truth.size(), "retrieval_accuracy");
  check_sizes(proxy_identity.size(), memory.size(), "retrieval_accuracy");
  if (queries.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    // A query the filter wiped out cannot be retrieved.
    if (queries[q].values.empty()) continue;
    std::size_t best = 0;
    double best_score = dot(queries[q].values, memory.proxy(0));
    for (std::size_t k = 1; k < memory.size(); ++k) {
      const double score = dot(queries[q].values, memory.proxy(k));
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    if (proxy_identity[best] == query_truth[q]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

CalibrationMetrics compute_metrics(const ClusterAssignment& assignment,
                                   std::span<const int> truth,
                                   const ProxyDictionary& memory,
                                   std::span<const InstanceFeature> heldout,
                                   std::span<const int> heldout_truth) {
  CalibrationMetrics m;
  m.purity = cluster_purity(assignment.labels, truth);
  m.ari = adjusted_rand_index(assignment.labels, truth);
  const auto owners = proxy_identities(
      assignment.labels, truth, static_cast<std::size_t>(assignment.num_clusters));
  m.retrieval_accuracy = retrieval_accuracy(memory, owners, heldout, heldout_truth);
  m.num_clusters = static_cast<std::size_t>(assignment.num_clusters);
  for (int l : assignment.labels) m.clustered += l >= 0 ? 1 : 0;
  m.proxy_storage = memory.storage_size();
  return m;
}

}  // namespace noisecal
