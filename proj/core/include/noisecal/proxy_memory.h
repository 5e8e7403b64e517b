#ifndef NOISECAL_PROXY_MEMORY_H_
#define NOISECAL_PROXY_MEMORY_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "noisecal/box.h"
#include "noisecal/clustering.h"

namespace noisecal {

struct CprConfig {
  double momentum = 0.2;      // online update speed, in [0, 1]
  double smoothing = 0.2;     // offline EMA weight of the previous epoch, in [0, 1]
  double temperature = 0.05;  // softmax temperature, > 0

  void validate() const;
};

/// Cluster-level memory: one unit-norm proxy per cluster, stored as a flat
/// K x D table. Storage never depends on how many instances fed it.
class ProxyDictionary {
 public:
  ProxyDictionary(std::size_t dim, double temperature, double momentum);

  // Adopts a K x D row-major table as is. Every row must already be unit
  // norm (within 1e-6); throws UsageError otherwise.
  static ProxyDictionary from_table(std::size_t dim, double temperature,
                                    double momentum, std::vector<double> table);

  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }
  double temperature() const { return temperature_; }
  double momentum() const { return momentum_; }

  std::span<const double> proxy(std::size_t k) const;
  std::span<const double> storage() const { return table_; }
  std::size_t storage_size() const { return table_.size(); }

  // Appends a proxy (normalized on entry) and returns its id.
  std::size_t append(std::span<const double> proxy);

  // Appends every proxy of other and returns the id offset of the first one.
  // Used to keep source-domain and target-domain clusters in disjoint id
  // ranges of one table.
  std::size_t merge(const ProxyDictionary& other);

  /// Momentum update of proxy k toward feature, followed by renormalization:
  /// c_k <- normalize((1 - momentum) c_k + momentum f). A momentum of 0 leaves
  /// the table untouched. Throws UsageError for an invalid id or dimension.
  void online_update(std::span<const double> feature, std::size_t k);

 private:
  std::size_t dim_;
  std::size_t count_ = 0;
  double temperature_;
  double momentum_;
  std::vector<double> table_;
};

// (1 - gamma) c + gamma f, without renormalization.
std::vector<double> momentum_step(std::span<const double> proxy,
                                  std::span<const double> feature,
                                  double gamma);

/// One proxy per cluster: the cluster mean, normalized. Throws
/// DegenerateInputError when there are no clusters or a mean is zero.
ProxyDictionary init_proxies(std::span<const InstanceFeature> features,
                             const ClusterAssignment& assignment,
                             const CprConfig& config);

struct ContrastiveResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d feature
};

/// Softmax cross-entropy of feature against every proxy, positive class k:
/// -log(exp(f.c_k / T) / sum_j exp(f.c_j / T)).
///
/// Evaluated with the maximum logit factored out and log1p for the remaining
/// mass, so tiny losses do not round to zero. The feature is used as given
/// (callers normally pass unit vectors).
ContrastiveResult contrastive_loss(std::span<const double> feature,
                                   std::size_t positive,
                                   const ProxyDictionary& memory);

// One detected instance as seen in a given epoch.
struct Observation {
  int image_id = 0;
  BoundingBox box;
  InstanceFeature feature;
};

// Every observation from the previous epoch; empty before the first epoch.
using EpochSnapshot = std::vector<Observation>;

/// Re-initializes the dictionary from the current epoch's clusters, smoothing
/// each member toward its previous-epoch counterpart:
/// smoothed = m * matched_prev + (1 - m) * f, where the match is the
/// previous observation in the same image whose box coincides (IoU >= 0.5).
/// Unmatched members, and every member when m == 0, enter unchanged, which
/// makes the result bit-identical to init_proxies in those cases.
ProxyDictionary offline_reinit(std::span<const Observation> current,
                               const ClusterAssignment& assignment,
                               const EpochSnapshot& previous,
                               const CprConfig& config);

// Checkpoint as <stem>.tensor (K x 1 x D canonical tensor) plus <stem>.json
// with K, D, temperature and momentum.
void save_dictionary(const ProxyDictionary& memory,
                     const std::filesystem::path& stem);
ProxyDictionary load_dictionary(const std::filesystem::path& stem);

}  // namespace noisecal

#endif  // NOISECAL_PROXY_MEMORY_H_
