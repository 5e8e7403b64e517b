#include "noisecal/feature_filter.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "noisecal/error.h"
#include "noisecal/threshold.h"

namespace noisecal {

ChannelVector avg_pool(const FeatureMap& map) {
  ChannelVector out(map.channels(), 0.0);
  const double inv = 1.0 / static_cast<double>(map.plane_size());
  for (std::size_t c = 0; c < map.channels(); ++c) {
    double sum = 0.0;
    for (double v : map.channel(c)) sum += v;
    out[c] = sum * inv;
  }
  return out;
}

std::vector<std::size_t> max_pool_argmax(const FeatureMap& map) {
  std::vector<std::size_t> out(map.channels(), 0);
  for (std::size_t c = 0; c < map.channels(); ++c) {
    const auto plane = map.channel(c);
    // max_element returns the first of equal maxima.
    out[c] = static_cast<std::size_t>(
        std::max_element(plane.begin(), plane.end()) - plane.begin());
  }
  return out;
}

ChannelVector max_pool(const FeatureMap& map) {
  const auto argmax = max_pool_argmax(map);
  ChannelVector out(map.channels());
  for (std::size_t c = 0; c < map.channels(); ++c) {
    out[c] = map.channel(c)[argmax[c]];
  }
  return out;
}

std::size_t mlp_hidden_width(std::size_t channels, std::size_t reduction) {
  if (reduction == 0) throw ConfigError("MLP reduction ratio must be >= 1");
  return std::max<std::size_t>(1, channels / reduction);
}

MlpParams MlpParams::zeros(std::size_t channels, std::size_t reduction) {
  if (channels == 0) throw ConfigError("MLP needs at least one channel");
  MlpParams p;
  p.channels = channels;
  p.hidden = mlp_hidden_width(channels, reduction);
  p.w1.assign(p.hidden * channels, 0.0);
  p.b1.assign(p.hidden, 0.0);
  p.w2.assign(channels * p.hidden, 0.0);
  p.b2.assign(channels, 0.0);
  return p;
}

MlpParams MlpParams::initial(std::size_t channels, std::size_t reduction,
                             std::mt19937_64& rng, double scale) {
  MlpParams p = zeros(channels, reduction);
  std::normal_distribution<double> normal(0.0, scale);
  for (double& w : p.w1) w = normal(rng);
  return p;
}

void MlpParams::validate(std::size_t expected_channels) const {
  if (channels != expected_channels) {
    throw ConfigError("MLP built for " + std::to_string(channels) +
                      " channels applied to a map with " +
                      std::to_string(expected_channels));
  }
  if (hidden == 0 || w1.size() != hidden * channels || b1.size() != hidden ||
      w2.size() != channels * hidden || b2.size() != channels) {
    throw ConfigError("MLP parameter shapes are inconsistent");
  }
  for (std::size_t i = 0; i < parameter_count(); ++i) {
    if (!std::isfinite(parameter(i))) {
      throw ConfigError("MLP parameter " + std::to_string(i) +
                        " is not finite");
    }
  }
}

std::vector<double> MlpParams::hidden_layer(const ChannelVector& input) const {
  std::vector<double> out(b1);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double* row = w1.data() + j * channels;
    for (std::size_t c = 0; c < channels; ++c) out[j] += row[c] * input[c];
  }
  return out;
}

std::vector<double> MlpParams::output_layer(
    const std::vector<double>& hidden_values) const {
  std::vector<double> out(b2);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = w2.data() + c * hidden;
    for (std::size_t j = 0; j < hidden; ++j) out[c] += row[j] * hidden_values[j];
  }
  return out;
}

double& MlpParams::parameter(std::size_t i) {
  if (i < w1.size()) return w1[i];
  i -= w1.size();
  if (i < b1.size()) return b1[i];
  i -= b1.size();
  if (i < w2.size()) return w2[i];
  i -= w2.size();
  if (i < b2.size()) return b2[i];
  throw UsageError("MLP parameter index out of range");
}

double MlpParams::parameter(std::size_t i) const {
  return const_cast<MlpParams&>(*this).parameter(i);
}

FilterParams FilterParams::initial(std::size_t channels, double lambda_init) {
  FilterParams p;
  p.lambda.assign(channels, lambda_init);
  p.clamp();
  return p;
}

void FilterParams::clamp() {
  for (double& l : lambda) l = std::clamp(l, 0.0, 1.0);
}

void FilterParams::validate(std::size_t expected_channels) const {
  if (lambda.size() != expected_channels) {
    throw ConfigError("filter has " + std::to_string(lambda.size()) +
                      " lambdas for " + std::to_string(expected_channels) +
                      " channels");
  }
  for (double l : lambda) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw ConfigError("filter lambda must lie in [0, 1]");
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PdtResult pdt_forward(const FeatureMap& map, const MlpParams& mlp,
                      ThresholdSource source) {
  if (map.empty()) throw ConfigError("PDT applied to an empty map");
  const std::size_t channels = map.channels();

  PdtResult result;
  PdtCache& cache = result.cache;
  cache.height = map.height();
  cache.width = map.width();
  cache.source = source;
  cache.avg = avg_pool(map);

  if (source == ThresholdSource::kPerceptionDriven) {
    mlp.validate(channels);
    cache.argmax = max_pool_argmax(map);
    cache.max.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      cache.max[c] = map.channel(c)[cache.argmax[c]];
    }
    cache.hidden = mlp.hidden_layer(cache.max);
    const auto logits = mlp.output_layer(cache.hidden);
    cache.alpha.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) cache.alpha[c] = sigmoid(logits[c]);
    cache.mlp = mlp;
  } else {
    cache.alpha.assign(channels, 1.0);
  }

  cache.raw_threshold.resize(channels);
  result.threshold.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    cache.raw_threshold[c] = cache.alpha[c] * cache.avg[c];
    result.threshold[c] = std::max(0.0, cache.raw_threshold[c]);
  }
  result.alpha = cache.alpha;
  return result;
}

PdtGradients pdt_backward(const PdtCache& cache,
                          const ChannelVector& d_threshold) {
  const std::size_t channels = cache.avg.size();
  if (d_threshold.size() != channels) {
    throw UsageError("threshold gradient does not match the PDT cache");
  }
  PdtGradients grads{FeatureMap(cache.height, cache.width, channels), {}};
  const double inv_area =
      1.0 / static_cast<double>(cache.height * cache.width);

  std::vector<double> d_logit(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    // Clamped channels do not depend on the input.
    const double g = cache.raw_threshold[c] > 0.0 ? d_threshold[c] : 0.0;
    const double d_avg = g * cache.alpha[c];
    for (double& v : grads.d_input.channel(c)) v += d_avg * inv_area;
    if (cache.source == ThresholdSource::kPerceptionDriven) {
      const double d_alpha = g * cache.avg[c];
      d_logit[c] = d_alpha * cache.alpha[c] * (1.0 - cache.alpha[c]);
    }
  }
  if (cache.source != ThresholdSource::kPerceptionDriven) return grads;

  const MlpParams& mlp = cache.mlp;
  MlpParams& d = grads.d_mlp;
  d.channels = mlp.channels;
  d.hidden = mlp.hidden;
  d.w1.assign(mlp.w1.size(), 0.0);
  d.b1.assign(mlp.b1.size(), 0.0);
  d.w2.assign(mlp.w2.size(), 0.0);
  d.b2.assign(mlp.b2.size(), 0.0);

  std::vector<double> d_hidden(mlp.hidden, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    d.b2[c] = d_logit[c];
    for (std::size_t j = 0; j < mlp.hidden; ++j) {
      d.w2[c * mlp.hidden + j] = d_logit[c] * cache.hidden[j];
      d_hidden[j] += mlp.w2[c * mlp.hidden + j] * d_logit[c];
    }
  }
  std::vector<double> d_max(channels, 0.0);
  for (std::size_t j = 0; j < mlp.hidden; ++j) {
    d.b1[j] = d_hidden[j];
    for (std::size_t c = 0; c < channels; ++c) {
      d.w1[j * channels + c] = d_hidden[j] * cache.max[c];
      d_max[c] += mlp.w1[j * channels + c] * d_hidden[j];
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    grads.d_input.channel(c)[cache.argmax[c]] += d_max[c];
  }
  return grads;
}

PdafResult pdaf_apply(const FeatureMap& map, const MlpParams& mlp,
                      const FilterParams& params, ThresholdSource source) {
  params.validate(map.channels());
  PdtResult pdt = pdt_forward(map, mlp, source);

  PdafResult result{FeatureMap(map.height(), map.width(), map.channels()), {}};
  for (std::size_t c = 0; c < map.channels(); ++c) {
    const double t = pdt.threshold[c];
    const double l = params.lambda[c];
    const auto in = map.channel(c);
    auto out = result.output.channel(c);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = scf_forward(in[i], t, l);
  }
  result.cache.input = map;
  result.cache.threshold = std::move(pdt.threshold);
  result.cache.lambda = params.lambda;
  result.cache.pdt = std::move(pdt.cache);
  return result;
}

FilterGradients pdaf_backward(const PdafCache& cache,
                              const FeatureMap& upstream) {
  const FeatureMap& input = cache.input;
  if (input.empty() || !input.same_shape(upstream) ||
      cache.threshold.size() != input.channels() ||
      cache.lambda.size() != input.channels() ||
      cache.pdt.avg.size() != input.channels() ||
      cache.pdt.height != input.height() || cache.pdt.width != input.width()) {
    throw UsageError("pdaf_backward: cache does not match upstream gradient");
  }

  const std::size_t channels = input.channels();
  FilterGradients grads;
  grads.d_input = FeatureMap(input.height(), input.width(), channels);
  grads.d_lambda.assign(channels, 0.0);
  grads.d_threshold.assign(channels, 0.0);

  for (std::size_t c = 0; c < channels; ++c) {
    const double t = cache.threshold[c];
    const double l = cache.lambda[c];
    const auto x = input.channel(c);
    const auto up = upstream.channel(c);
    auto dx = grads.d_input.channel(c);
    double d_lambda = 0.0;
    double d_threshold = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (up[i] == 0.0) continue;
      const ScfGradient g = scf_backward(x[i], t, l, up[i]);
      dx[i] = g.dx;
      d_lambda += g.dlambda;
      d_threshold += g.dthreshold;
    }
    grads.d_lambda[c] = d_lambda;
    grads.d_threshold[c] = d_threshold;
  }

  PdtGradients through = pdt_backward(cache.pdt, grads.d_threshold);
  auto dst = grads.d_input.values();
  const auto src = through.d_input.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  grads.d_mlp = std::move(through.d_mlp);
  return grads;
}

}  // namespace noisecal
