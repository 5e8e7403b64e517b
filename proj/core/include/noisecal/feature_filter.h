#ifndef NOISECAL_FEATURE_FILTER_H_
#define NOISECAL_FEATURE_FILTER_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "noisecal/feature_map.h"

namespace noisecal {

// Per-channel spatial mean.
ChannelVector avg_pool(const FeatureMap& map);

// Per-channel spatial maximum.
ChannelVector max_pool(const FeatureMap& map);

// Plane offset (h * W + w) of each channel's maximum; ties go to the lowest
// offset.
std::vector<std::size_t> max_pool_argmax(const FeatureMap& map);

inline constexpr std::size_t kDefaultReduction = 16;

// Hidden width of the two-layer threshold MLP: floor(C / r), at least 1.
std::size_t mlp_hidden_width(std::size_t channels, std::size_t reduction);

/// Two dense layers, C -> C/r -> C, with no activation between them.
///
/// Weight matrices are row-major: w1 is hidden x channels, w2 is
/// channels x hidden. The same struct carries gradients.
struct MlpParams {
  std::size_t channels = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;

  // All-zero parameters.
  static MlpParams zeros(std::size_t channels,
                         std::size_t reduction = kDefaultReduction);

  // First layer drawn from N(0, scale^2); output layer zero so that the
  // initial scaling factor is exactly sigmoid(0) = 0.5.
  static MlpParams initial(std::size_t channels, std::size_t reduction,
                           std::mt19937_64& rng, double scale = 0.1);

  // Throws ConfigError if shapes are inconsistent or do not match channels.
  void validate(std::size_t expected_channels) const;

  // Hidden pre-activation and output logits for one input vector.
  std::vector<double> hidden_layer(const ChannelVector& input) const;
  std::vector<double> output_layer(const std::vector<double>& hidden) const;

  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }
  // Flat views in the fixed order w1, b1, w2, b2.
  double& parameter(std::size_t i);
  double parameter(std::size_t i) const;
};

/// Learnable per-channel blend between soft (0) and high-order (1)
/// thresholding.
struct FilterParams {
  ChannelVector lambda;

  static FilterParams initial(std::size_t channels, double lambda_init = 0.0);
  // Clamps every lambda into [0, 1].
  void clamp();
  void validate(std::size_t expected_channels) const;
};

// Where the per-channel threshold comes from.
enum class ThresholdSource {
  kPerceptionDriven,  // sigmoid(MLP(max_pool)) * avg_pool
  kChannelAverage,    // avg_pool alone
};

struct PdtCache {
  std::size_t height = 0;
  std::size_t width = 0;
  ThresholdSource source = ThresholdSource::kPerceptionDriven;
  ChannelVector avg;
  ChannelVector max;
  std::vector<std::size_t> argmax;
  std::vector<double> hidden;
  ChannelVector alpha;
  // alpha * avg before clamping at zero.
  ChannelVector raw_threshold;
  MlpParams mlp;
};

struct PdtResult {
  ChannelVector threshold;
  ChannelVector alpha;
  PdtCache cache;
};

/// Perception-driven threshold.
///
/// alpha = sigmoid(MLP(max_pool(F))), threshold = alpha * avg_pool(F). The
/// shrinkage functions require a nonnegative threshold, so a channel whose
/// mean is negative gets threshold 0 (its gradient is then zero as well).
/// Throws ConfigError when the MLP does not match F's channel count.
PdtResult pdt_forward(const FeatureMap& map, const MlpParams& mlp,
                      ThresholdSource source = ThresholdSource::kPerceptionDriven);

struct PdtGradients {
  FeatureMap d_input;
  MlpParams d_mlp;
};

// Back-propagates d(loss)/d(threshold) to the input map and MLP parameters.
PdtGradients pdt_backward(const PdtCache& cache,
                          const ChannelVector& d_threshold);

struct PdafCache {
  FeatureMap input;
  ChannelVector threshold;
  ChannelVector lambda;
  PdtCache pdt;
};

struct PdafResult {
  FeatureMap output;
  PdafCache cache;
};

/// One perception-driven adaptive filter application:
/// out[h, w, c] = scf_forward(F[h, w, c], threshold_c, lambda_c).
PdafResult pdaf_apply(const FeatureMap& map, const MlpParams& mlp,
                      const FilterParams& params,
                      ThresholdSource source = ThresholdSource::kPerceptionDriven);

struct FilterGradients {
  FeatureMap d_input;
  ChannelVector d_lambda;
  MlpParams d_mlp;
  ChannelVector d_threshold;
};

/// Chain rule through the filter, the threshold product, the sigmoid/MLP path
/// and both pooling operators. Average pooling spreads its gradient uniformly;
/// max pooling routes it to the argmax cell. Throws UsageError if upstream
/// does not match the cached input shape.
FilterGradients pdaf_backward(const PdafCache& cache,
                              const FeatureMap& upstream);

double sigmoid(double x);

}  // namespace noisecal

#endif  // NOISECAL_FEATURE_FILTER_H_
