#ifndef NOISECAL_FILTER_STACK_H_
#define NOISECAL_FILTER_STACK_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "noisecal/box.h"
#include "noisecal/feature_filter.h"

namespace noisecal {

struct FilterStackConfig {
  std::size_t stages = 2;
  std::size_t reduction = kDefaultReduction;
  bool perception_driven = true;  // off: threshold is the plain channel mean
  bool self_calibrating = true;   // off: soft threshold, lambda pinned at 0
  double lambda_init = 0.0;
  double mlp_init_scale = 0.1;

  // With both components off there is no filter at all.
  bool enabled() const { return perception_driven || self_calibrating; }
  void validate() const;
};

struct FilterStage {
  MlpParams mlp;
  FilterParams filter;
};

struct StackForward {
  FeatureMap output;
  std::vector<PdafCache> caches;  // one per stage, input first
};

struct StageGradients {
  ChannelVector d_lambda;
  MlpParams d_mlp;
};

struct StackGradients {
  std::vector<StageGradients> stages;

  void accumulate(const StackGradients& other);
  void scale(double factor);
};

/// Stand-in for a backbone with a filter after each block: `stages` PDAF
/// applications in sequence, each with its own MLP and lambdas.
class FilterStack {
 public:
  FilterStack(std::size_t channels, const FilterStackConfig& config,
              std::uint64_t seed);

  StackForward forward(const FeatureMap& map) const;
  // Gradients w.r.t. every stage's parameters for an upstream gradient on
  // the stack output.
  StackGradients backward(const StackForward& forward,
                          const FeatureMap& upstream) const;
  StackGradients zero_gradients() const;

  // Plain SGD on the trainable parameters, then lambda clamped to [0, 1].
  void step(const StackGradients& grads, double learning_rate);

  const FilterStackConfig& config() const { return config_; }
  const std::vector<FilterStage>& stages() const { return stages_; }
  std::vector<FilterStage>& mutable_stages() { return stages_; }
  std::size_t channels() const { return channels_; }

 private:
  ThresholdSource source() const;

  std::size_t channels_;
  FilterStackConfig config_;
  std::vector<FilterStage> stages_;
};

// Map cells whose centres fall inside box (box in pixels, cell_size pixels per
// cell), as plane offsets. Falls back to the cell nearest the box centre when
// the box covers no centre.
std::vector<std::size_t> roi_cells(const BoundingBox& box, std::size_t height,
                                   std::size_t width, double cell_size);

// Mean over the given cells of each channel.
std::vector<double> roi_pool(const FeatureMap& map,
                             const std::vector<std::size_t>& cells);

// Signed embedding from a two-half pooled vector: first half minus second.
std::vector<double> signed_embedding(const std::vector<double>& pooled);

// Embeddings shorter than this count as wiped out by the filter.
inline constexpr double kMinEmbeddingNorm = 1e-12;

struct RoiEmbedding {
  std::vector<double> unit;  // normalized when norm > kMinEmbeddingNorm
  double norm = 0.0;
};

// Pool, sign and L2-normalize one RoI of a filtered map.
RoiEmbedding roi_embedding(const FeatureMap& filtered,
                           const std::vector<std::size_t>& cells);

// Map gradient for an upstream gradient on the unit embedding. Requires
// embedding.norm > kMinEmbeddingNorm.
FeatureMap roi_embedding_backward(const FeatureMap& shape,
                                  const RoiEmbedding& embedding,
                                  const std::vector<double>& d_unit,
                                  const std::vector<std::size_t>& cells);

}  // namespace noisecal

#endif  // NOISECAL_FILTER_STACK_H_
