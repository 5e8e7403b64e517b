#include "noisecal/filter_stack.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "noisecal/clustering.h"
#include "noisecal/error.h"

namespace noisecal {

void FilterStackConfig::validate() const {
  if (stages < 1) throw ConfigError("filter: stages must be >= 1");
  if (reduction < 1) throw ConfigError("filter: reduction must be >= 1");
  if (!(lambda_init >= 0.0 && lambda_init <= 1.0)) {
    throw ConfigError("filter: lambda_init must lie in [0, 1]");
  }
  if (!(mlp_init_scale >= 0.0) || !std::isfinite(mlp_init_scale)) {
    throw ConfigError("filter: mlp_init_scale must be >= 0");
  }
}

void StackGradients::accumulate(const StackGradients& other) {
  if (stages.size() != other.stages.size()) {
    throw UsageError("gradient accumulation across different stacks");
  }
  for (std::size_t s = 0; s < stages.size(); ++s) {
    auto& dst = stages[s];
    const auto& src = other.stages[s];
    for (std::size_t c = 0; c < dst.d_lambda.size(); ++c) dst.d_lambda[c] += src.d_lambda[c];
    for (std::size_t i = 0; i < dst.d_mlp.parameter_count(); ++i) {
      dst.d_mlp.parameter(i) += src.d_mlp.parameter(i);
    }
  }
}

void StackGradients::scale(double factor) {
  for (auto& stage : stages) {
    for (double& v : stage.d_lambda) v *= factor;
    for (std::size_t i = 0; i < stage.d_mlp.parameter_count(); ++i) {
      stage.d_mlp.parameter(i) *= factor;
    }
  }
}

FilterStack::FilterStack(std::size_t channels, const FilterStackConfig& config,
                         std::uint64_t seed)
    : channels_(channels), config_(config) {
  config_.validate();
  if (!config_.enabled()) return;
  std::mt19937_64 rng(seed);
  const double lambda0 = config_.self_calibrating ? config_.lambda_init : 0.0;
  for (std::size_t s = 0; s < config_.stages; ++s) {
    stages_.push_back({MlpParams::initial(channels, config_.reduction, rng,
                                          config_.mlp_init_scale),
                       FilterParams::initial(channels, lambda0)});
  }
}

ThresholdSource FilterStack::source() const {
  return config_.perception_driven ? ThresholdSource::kPerceptionDriven
                                   : ThresholdSource::kChannelAverage;
}

StackForward FilterStack::forward(const FeatureMap& map) const {
  StackForward fwd;
  fwd.output = map;
  for (const auto& stage : stages_) {
    auto applied = pdaf_apply(fwd.output, stage.mlp, stage.filter, source());
    fwd.output = std::move(applied.output);
    fwd.caches.push_back(std::move(applied.cache));
  }
  return fwd;
}

StackGradients FilterStack::zero_gradients() const {
  StackGradients grads;
  for (const auto& stage : stages_) {
    StageGradients g;
    g.d_lambda.assign(channels_, 0.0);
    g.d_mlp = stage.mlp;
    for (std::size_t i = 0; i < g.d_mlp.parameter_count(); ++i) g.d_mlp.parameter(i) = 0.0;
    grads.stages.push_back(std::move(g));
  }
  return grads;
}

StackGradients FilterStack::backward(const StackForward& forward,
                                     const FeatureMap& upstream) const {
  if (forward.caches.size() != stages_.size()) {
    throw UsageError("filter stack backward: cache count does not match stages");
  }
  StackGradients grads = zero_gradients();
  FeatureMap grad = upstream;
  for (std::size_t s = stages_.size(); s-- > 0;) {
    auto g = pdaf_backward(forward.caches[s], grad);
    grads.stages[s].d_lambda = std::move(g.d_lambda);
    if (config_.perception_driven) grads.stages[s].d_mlp = std::move(g.d_mlp);
    grad = std::move(g.d_input);
  }
  return grads;
}

void FilterStack::step(const StackGradients& grads, double learning_rate) {
  if (grads.stages.size() != stages_.size()) {
    throw UsageError("filter stack step: gradient does not match stages");
  }
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    auto& stage = stages_[s];
    const auto& g = grads.stages[s];
    if (config_.self_calibrating) {
      for (std::size_t c = 0; c < channels_; ++c) {
        stage.filter.lambda[c] -= learning_rate * g.d_lambda[c];
      }
      stage.filter.clamp();
    }
    if (config_.perception_driven) {
      for (std::size_t i = 0; i < stage.mlp.parameter_count(); ++i) {
        stage.mlp.parameter(i) -= learning_rate * g.d_mlp.parameter(i);
      }
    }
  }
}

std::vector<std::size_t> roi_cells(const BoundingBox& box, std::size_t height,
                                   std::size_t width, double cell_size) {
  std::vector<std::size_t> cells;
  for (std::size_t h = 0; h < height; ++h) {
    const double cy = (static_cast<double>(h) + 0.5) * cell_size;
    if (cy < box.y1 || cy >= box.y2) continue;
    for (std::size_t w = 0; w < width; ++w) {
      const double cx = (static_cast<double>(w) + 0.5) * cell_size;
      if (cx >= box.x1 && cx < box.x2) cells.push_back(h * width + w);
    }
  }
  if (cells.empty()) {
    const auto clamp_index = [&](double centre, std::size_t extent) {
      const double idx = std::floor(centre / cell_size);
      return static_cast<std::size_t>(
          std::clamp(idx, 0.0, static_cast<double>(extent - 1)));
    };
    cells.push_back(clamp_index(0.5 * (box.y1 + box.y2), height) * width +
                    clamp_index(0.5 * (box.x1 + box.x2), width));
  }
  return cells;
}

std::vector<double> roi_pool(const FeatureMap& map,
                             const std::vector<std::size_t>& cells) {
  std::vector<double> pooled(map.channels(), 0.0);
  const double inv = 1.0 / static_cast<double>(cells.size());
  for (std::size_t c = 0; c < map.channels(); ++c) {
    const auto plane = map.channel(c);
    double sum = 0.0;
    for (std::size_t cell : cells) sum += plane[cell];
    pooled[c] = sum * inv;
  }
  return pooled;
}

std::vector<double> signed_embedding(const std::vector<double>& pooled) {
  const std::size_t dim = pooled.size() / 2;
  std::vector<double> out(dim);
  for (std::size_t d = 0; d < dim; ++d) out[d] = pooled[d] - pooled[dim + d];
  return out;
}

RoiEmbedding roi_embedding(const FeatureMap& filtered,
                           const std::vector<std::size_t>& cells) {
  RoiEmbedding e;
  e.unit = signed_embedding(roi_pool(filtered, cells));
  e.norm = l2_norm(e.unit);
  if (e.norm > kMinEmbeddingNorm) {
    for (double& v : e.unit) v /= e.norm;
  }
  return e;
}

FeatureMap roi_embedding_backward(const FeatureMap& shape,
                                  const RoiEmbedding& embedding,
                                  const std::vector<double>& d_unit,
                                  const std::vector<std::size_t>& cells) {
  const std::size_t dim = embedding.unit.size();
  // Through normalization: (I - u u^T) g / |v|.
  const double along = dot(embedding.unit, d_unit);
  std::vector<double> d_raw(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    d_raw[d] = (d_unit[d] - embedding.unit[d] * along) / embedding.norm;
  }
  FeatureMap up(shape.height(), shape.width(), shape.channels());
  const double inv = 1.0 / static_cast<double>(cells.size());
  for (std::size_t d = 0; d < dim; ++d) {
    auto pos = up.channel(d);
    auto neg = up.channel(dim + d);
    for (std::size_t cell : cells) {
      pos[cell] += d_raw[d] * inv;
      neg[cell] -= d_raw[d] * inv;
    }
  }
  return up;
}

}  // namespace noisecal
