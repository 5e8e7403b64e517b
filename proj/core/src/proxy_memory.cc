#include "noisecal/proxy_memory.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "json.hpp"
#include "noisecal/error.h"
#include "noisecal/tensor_io.h"

namespace noisecal {

void CprConfig::validate() const {
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw ConfigError("cpr momentum must lie in [0, 1]");
  }
  if (!(smoothing >= 0.0 && smoothing <= 1.0)) {
    throw ConfigError("cpr smoothing must lie in [0, 1]");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("cpr temperature must be positive");
  }
}

ProxyDictionary::ProxyDictionary(std::size_t dim, double temperature,
                                 double momentum)
    : dim_(dim), temperature_(temperature), momentum_(momentum) {
  if (dim == 0) throw ConfigError("proxy dimension must be positive");
  CprConfig{momentum, 0.0, temperature}.validate();
}

ProxyDictionary ProxyDictionary::from_table(std::size_t dim, double temperature,
                                            double momentum,
                                            std::vector<double> table) {
  ProxyDictionary memory(dim, temperature, momentum);
  if (table.size() % dim != 0) throw UsageError("proxy table size is not a multiple of D");
  for (std::size_t off = 0; off < table.size(); off += dim) {
    const double norm = l2_norm(std::span<const double>(table).subspan(off, dim));
    if (!(std::abs(norm - 1.0) <= 1e-6)) throw UsageError("proxy table row is not unit norm");
  }
  memory.count_ = table.size() / dim;
  memory.table_ = std::move(table);
  return memory;
}

std::span<const double> ProxyDictionary::proxy(std::size_t k) const {
  if (k >= count_) {
    throw UsageError("proxy id " + std::to_string(k) + " out of range (K=" +
                     std::to_string(count_) + ")");
  }
  return {table_.data() + k * dim_, dim_};
}

std::size_t ProxyDictionary::append(std::span<const double> proxy) {
  if (proxy.size() != dim_) throw UsageError("proxy dimension mismatch");
  const auto unit = l2_normalized(proxy);
  table_.insert(table_.end(), unit.begin(), unit.end());
  return count_++;
}

std::size_t ProxyDictionary::merge(const ProxyDictionary& other) {
  if (other.dim_ != dim_) throw UsageError("cannot merge dictionaries of different dimension");
  const std::size_t offset = count_;
  table_.insert(table_.end(), other.table_.begin(), other.table_.end());
  count_ += other.count_;
  return offset;
}

void ProxyDictionary::online_update(std::span<const double> feature,
                                    std::size_t k) {
  if (k >= count_) {
    throw UsageError("online_update: cluster id " + std::to_string(k) +
                     " out of range (K=" + std::to_string(count_) + ")");
  }
  if (feature.size() != dim_) throw UsageError("online_update: dimension mismatch");
  if (momentum_ == 0.0) return;
  auto row = std::span<double>(table_).subspan(k * dim_, dim_);
  const auto next = l2_normalized(momentum_step(row, feature, momentum_));
  std::copy(next.begin(), next.end(), row.begin());
}

std::vector<double> momentum_step(std::span<const double> proxy,
                                  std::span<const double> feature,
                                  double gamma) {
  if (proxy.size() != feature.size()) throw UsageError("momentum_step: dimension mismatch");
  std::vector<double> out(proxy.size());
  for (std::size_t d = 0; d < out.size(); ++d) {
    out[d] = (1.0 - gamma) * proxy[d] + gamma * feature[d];
  }
  return out;
}

ProxyDictionary init_proxies(std::span<const InstanceFeature> features,
                             const ClusterAssignment& assignment,
                             const CprConfig& config) {
  config.validate();
  if (assignment.num_clusters < 1) {
    throw DegenerateInputError("cannot build a proxy dictionary from zero clusters");
  }
  const auto means = cluster_means(features, assignment);
  ProxyDictionary memory(means.front().size(), config.temperature,
                         config.momentum);
  for (const auto& mean : means) memory.append(mean);
  return memory;
}

ContrastiveResult contrastive_loss(std::span<const double> feature,
                                   std::size_t positive,
                                   const ProxyDictionary& memory) {
  const std::size_t k = memory.size();
  if (positive >= k) {
    throw UsageError("contrastive_loss: cluster id " + std::to_string(positive) +
                     " out of range (K=" + std::to_string(k) + ")");
  }
  if (feature.size() != memory.dim()) {
    throw UsageError("contrastive_loss: feature dimension mismatch");
  }
  const double inv_t = 1.0 / memory.temperature();
  std::vector<double> logits(k);
  for (std::size_t j = 0; j < k; ++j) logits[j] = dot(feature, memory.proxy(j)) * inv_t;

  const std::size_t top =
      static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  std::vector<double> weights(k);
  double rest = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    weights[j] = std::exp(logits[j] - logits[top]);
    if (j != top) rest += weights[j];
  }
  const double log_partition = logits[top] + std::log1p(rest);

  ContrastiveResult result;
  result.loss = positive == top ? std::log1p(rest)
                                : log_partition - logits[positive];
  // dL/df = (sum_j p_j c_j - c_positive) / T
  const double norm = 1.0 + rest;
  result.grad.assign(memory.dim(), 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double p = weights[j] / norm - (j == positive ? 1.0 : 0.0);
    if (p == 0.0) continue;
    const auto c = memory.proxy(j);
    for (std::size_t d = 0; d < c.size(); ++d) result.grad[d] += p * c[d] * inv_t;
  }
  return result;
}

ProxyDictionary offline_reinit(std::span<const Observation> current,
                               const ClusterAssignment& assignment,
                               const EpochSnapshot& previous,
                               const CprConfig& config) {
  config.validate();
  if (assignment.labels.size() != current.size()) {
    throw UsageError("offline_reinit: assignment size does not match observations");
  }
  const double m = config.smoothing;

  std::map<int, std::vector<std::size_t>> previous_by_image;
  if (m > 0.0) {
    for (std::size_t i = 0; i < previous.size(); ++i) {
      previous_by_image[previous[i].image_id].push_back(i);
    }
  }

  std::vector<InstanceFeature> smoothed;
  smoothed.reserve(current.size());
  std::vector<BoundingBox> candidates;
  for (std::size_t i = 0; i < current.size(); ++i) {
    const Observation& obs = current[i];
    smoothed.push_back(obs.feature);
    if (assignment.labels[i] < 0) continue;
    const auto it = previous_by_image.find(obs.image_id);
    if (it == previous_by_image.end()) continue;

    candidates.clear();
    for (std::size_t idx : it->second) candidates.push_back(previous[idx].box);
    const MatchResult match = match_previous(obs.box, candidates);
    if (!match.index) continue;

    const auto& prev = previous[it->second[*match.index]].feature.values;
    auto& out = smoothed.back();
    if (prev.size() != out.values.size()) {
      throw UsageError("offline_reinit: snapshot feature dimension mismatch");
    }
    for (std::size_t d = 0; d < prev.size(); ++d) {
      out.values[d] = m * prev[d] + (1.0 - m) * out.values[d];
    }
    out.normalized = false;
  }
  return init_proxies(smoothed, assignment, config);
}

void save_dictionary(const ProxyDictionary& memory,
                     const std::filesystem::path& stem) {
  if (memory.size() == 0) throw UsageError("cannot save an empty dictionary");
  const auto table = memory.storage();
  std::vector<double> values(table.begin(), table.end());
  save_tensor(stem.string() + ".tensor",
              FeatureMap::from_canonical(memory.size(), 1, memory.dim(), values));

  nlohmann::ordered_json meta;
  meta["K"] = memory.size();
  meta["D"] = memory.dim();
  meta["temperature"] = memory.temperature();
  meta["momentum"] = memory.momentum();
  std::ofstream out(stem.string() + ".json");
  if (!out) throw FormatError("cannot write " + stem.string() + ".json");
  out << meta.dump(2) << '\n';
}

ProxyDictionary load_dictionary(const std::filesystem::path& stem) {
  std::ifstream in(stem.string() + ".json");
  if (!in) throw FormatError("cannot open " + stem.string() + ".json");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dictionary sidecar: ") + e.what());
  }
  const auto table = load_tensor(stem.string() + ".tensor");
  try {
    const auto k = meta.at("K").get<std::size_t>();
    const auto d = meta.at("D").get<std::size_t>();
    if (table.height() != k || table.width() != 1 || table.channels() != d) {
      throw FormatError("dictionary tensor shape does not match sidecar");
    }
    return ProxyDictionary::from_table(d, meta.at("temperature").get<double>(),
                                       meta.at("momentum").get<double>(),
                                       table.to_canonical());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dictionary sidecar: ") + e.what());
  }
}

}  // namespace noisecal
