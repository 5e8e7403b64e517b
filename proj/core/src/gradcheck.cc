#include "noisecal/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "noisecal/clustering.h"
#include "noisecal/feature_filter.h"
#include "noisecal/filter_stack.h"
#include "noisecal/proxy_memory.h"

namespace noisecal {

double gradient_error(double analytic, double numeric) {
  const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

bool GradientCheckReport::passed() const {
  return !entries.empty() &&
         std::all_of(entries.begin(), entries.end(),
                     [](const GradientCheckEntry& e) { return e.passed; });
}

double GradientCheckReport::max_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_error);
  return m;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename Fn>
double central_difference(double& slot, double step, Fn&& eval) {
  const double saved = slot;
  slot = saved + step;
  const double plus = eval();
  slot = saved - step;
  const double minus = eval();
  slot = saved;
  return (plus - minus) / (2.0 * step);
}

struct Tracker {
  GradientCheckEntry entry;
  void record(double analytic, double numeric) {
    entry.max_error = std::max(entry.max_error, gradient_error(analytic, numeric));
    ++entry.points;
  }
};

GradientCheckEntry check_scf(const GradientCheckOptions& opt,
                             const GradientOps& ops, Rng& rng) {
  Tracker t{{"scf_backward"}};
  while (t.entry.points < opt.min_points) {
    double x = uniform(rng, -10.0, 10.0);
    double tau = uniform(rng, 0.0, 5.0);
    double lambda = uniform(rng, 0.0, 1.0);
    if (std::abs(x) - tau <= opt.margin) continue;
    const ScfGradient g = ops.scf_backward(x, tau, lambda, 1.0);
    auto f = [&] { return scf_forward(x, tau, lambda); };
    const double nx = central_difference(x, opt.step, f);
    const double nt = central_difference(tau, opt.step, f);
    const double nl = central_difference(lambda, opt.step, f);
    const double err = std::max({gradient_error(g.dx, nx), gradient_error(g.dthreshold, nt),
                                 gradient_error(g.dlambda, nl)});
    t.entry.max_error = std::max(t.entry.max_error, err);
    ++t.entry.points;
  }
  return t.entry;
}

MlpParams random_mlp(std::size_t channels, Rng& rng) {
  MlpParams mlp = MlpParams::zeros(channels, std::max<std::size_t>(1, channels / 2));
  for (std::size_t i = 0; i < mlp.parameter_count(); ++i) {
    mlp.parameter(i) = uniform(rng, -0.8, 0.8);
  }
  return mlp;
}

bool max_pool_separated(const FeatureMap& map, double gap) {
  for (std::size_t c = 0; c < map.channels(); ++c) {
    std::vector<double> plane(map.channel(c).begin(), map.channel(c).end());
    if (plane.size() < 2) continue;
    std::partial_sort(plane.begin(), plane.begin() + 2, plane.end(), std::greater<>());
    if (plane[0] - plane[1] < gap) return false;
  }
  return true;
}

// Random map whose entries stay clear of their channel threshold, whose
// thresholds stay clear of the zero clamp, and whose channel maxima are
// unique. Gives up (nullopt) when the MLP keeps a threshold at the clamp.
std::optional<FeatureMap> random_filter_input(const MlpParams& mlp, double margin,
                                              Rng& rng) {
  for (int attempt = 0; attempt < 20; ++attempt) {
    const std::size_t h = uniform_index(rng, 2, 4);
    const std::size_t w = uniform_index(rng, 2, 4);
    FeatureMap map(h, w, mlp.channels);
    auto draw = [&] {
      const double mag = uniform(rng, 0.05, 3.0);
      return uniform(rng, 0.0, 1.0) < 0.8 ? mag : -mag;
    };
    for (double& v : map.values()) v = draw();
    for (int round = 0; round < 200; ++round) {
      const auto pdt = pdt_forward(map, mlp);
      bool clear = true;
      for (std::size_t c = 0; c < map.channels(); ++c) {
        for (double& v : map.channel(c)) {
          if (std::abs(std::abs(v) - pdt.threshold[c]) <= margin) {
            v = draw();
            clear = false;
          }
        }
      }
      if (!clear) continue;
      const bool clamp_clear = std::all_of(
          pdt.cache.raw_threshold.begin(), pdt.cache.raw_threshold.end(),
          [&](double t) { return t > margin; });
      if (clamp_clear && max_pool_separated(map, 1e-3)) return map;
      break;
    }
  }
  return std::nullopt;
}

GradientCheckEntry check_pdt(const GradientCheckOptions& opt, Rng& rng) {
  Tracker t{{"pdt_backward"}};
  while (t.entry.points < opt.min_points) {
    const std::size_t channels = uniform_index(rng, 2, 8);
    MlpParams mlp = random_mlp(channels, rng);
    auto input = random_filter_input(mlp, opt.margin, rng);
    if (!input) continue;
    FeatureMap& map = *input;
    ChannelVector weights(channels);
    for (double& v : weights) v = uniform(rng, -1.0, 1.0);

    auto loss = [&] {
      const auto pdt = pdt_forward(map, mlp);
      double s = 0.0;
      for (std::size_t c = 0; c < channels; ++c) s += weights[c] * pdt.threshold[c];
      return s;
    };
    const auto grads = pdt_backward(pdt_forward(map, mlp).cache, weights);
    auto values = map.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      t.record(grads.d_input.values()[i], central_difference(values[i], opt.step, loss));
    }
    for (std::size_t i = 0; i < mlp.parameter_count(); ++i) {
      t.record(grads.d_mlp.parameter(i), central_difference(mlp.parameter(i), opt.step, loss));
    }
  }
  return t.entry;
}

GradientCheckEntry check_pdaf(const GradientCheckOptions& opt, Rng& rng) {
  Tracker t{{"pdaf_backward"}};
  while (t.entry.points < opt.min_points) {
    const std::size_t channels = uniform_index(rng, 2, 6);
    MlpParams mlp = random_mlp(channels, rng);
    FilterParams params = FilterParams::initial(channels);
    for (double& l : params.lambda) l = uniform(rng, 0.0, 1.0);
    auto input = random_filter_input(mlp, opt.margin, rng);
    if (!input) continue;
    FeatureMap& map = *input;

    auto loss = [&] {
      const auto out = pdaf_apply(map, mlp, params).output;
      double s = 0.0;
      for (double v : out.values()) s += v;
      return s;
    };
    const FeatureMap ones(map.height(), map.width(), map.channels(), 1.0);
    const auto grads = pdaf_backward(pdaf_apply(map, mlp, params).cache, ones);
    auto values = map.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      t.record(grads.d_input.values()[i], central_difference(values[i], opt.step, loss));
    }
    for (std::size_t c = 0; c < channels; ++c) {
      t.record(grads.d_lambda[c], central_difference(params.lambda[c], opt.step, loss));
    }
    for (std::size_t i = 0; i < mlp.parameter_count(); ++i) {
      t.record(grads.d_mlp.parameter(i), central_difference(mlp.parameter(i), opt.step, loss));
    }
  }
  return t.entry;
}

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  do {
    for (double& x : v) x = normal(rng);
  } while (l2_norm(v) < 1e-6);
  return l2_normalized(v);
}

GradientCheckEntry check_contrastive(const GradientCheckOptions& opt, Rng& rng) {
  Tracker t{{"contrastive_loss"}};
  while (t.entry.points < opt.min_points) {
    const std::size_t k = uniform_index(rng, 2, 8);
    const std::size_t dim = uniform_index(rng, 2, 16);
    ProxyDictionary memory(dim, uniform(rng, 0.05, 1.0), 0.2);
    for (std::size_t j = 0; j < k; ++j) memory.append(random_unit(rng, dim));
    std::vector<double> f = random_unit(rng, dim);
    const std::size_t positive = uniform_index(rng, 0, k - 1);

    const auto analytic = contrastive_loss(f, positive, memory).grad;
    auto loss = [&] { return contrastive_loss(f, positive, memory).loss; };
    for (std::size_t d = 0; d < dim; ++d) {
      t.record(analytic[d], central_difference(f[d], opt.step, loss));
    }
  }
  return t.entry;
}

// Every stage input clear of its thresholds, the clamp and max-pool ties.
bool stack_point_clear(const StackForward& fwd, double margin) {
  for (const auto& c : fwd.caches) {
    for (std::size_t ch = 0; ch < c.input.channels(); ++ch) {
      if (c.pdt.raw_threshold[ch] <= margin) return false;
      for (double v : c.input.channel(ch)) {
        if (std::abs(std::abs(v) - c.threshold[ch]) <= margin) return false;
      }
    }
    if (!max_pool_separated(c.input, 1e-3)) return false;
  }
  return true;
}

// Two-stage filter stack, RoI embedding and contrastive loss end to end,
// checked on every stage's lambdas and MLP parameters.
GradientCheckEntry check_filter_stack(const GradientCheckOptions& opt, Rng& rng) {
  Tracker t{{"filter_stack"}};
  while (t.entry.points < opt.min_points) {
    const std::size_t dim = uniform_index(rng, 2, 3);
    const std::size_t side = uniform_index(rng, 2, 3);
    FilterStackConfig config;
    config.reduction = 2;
    FilterStack stack(2 * dim, config, rng());
    for (auto& stage : stack.mutable_stages()) {
      for (std::size_t i = 0; i < stage.mlp.parameter_count(); ++i) {
        stage.mlp.parameter(i) = uniform(rng, -0.8, 0.8);
      }
      for (double& l : stage.filter.lambda) l = uniform(rng, 0.0, 1.0);
    }
    FeatureMap map(side, side, 2 * dim);
    for (double& v : map.values()) {
      const double mag = uniform(rng, 0.05, 3.0);
      v = uniform(rng, 0.0, 1.0) < 0.8 ? mag : -mag;
    }
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < side * side; ++i) {
      if (cells.empty() || uniform(rng, 0.0, 1.0) < 0.7) cells.push_back(i);
    }

    const StackForward fwd = stack.forward(map);
    if (!stack_point_clear(fwd, opt.margin)) continue;
    const RoiEmbedding e = roi_embedding(fwd.output, cells);
    if (e.norm < 0.05) continue;

    const std::size_t k = uniform_index(rng, 2, 5);
    ProxyDictionary memory(dim, uniform(rng, 0.1, 1.0), 0.2);
    for (std::size_t j = 0; j < k; ++j) memory.append(random_unit(rng, dim));
    const std::size_t positive = uniform_index(rng, 0, k - 1);

    const auto res = contrastive_loss(e.unit, positive, memory);
    const auto grads =
        stack.backward(fwd, roi_embedding_backward(map, e, res.grad, cells));
    auto loss = [&] {
      return contrastive_loss(roi_embedding(stack.forward(map).output, cells).unit,
                              positive, memory)
          .loss;
    };
    auto& stages = stack.mutable_stages();
    for (std::size_t s = 0; s < stages.size(); ++s) {
      for (std::size_t c = 0; c < 2 * dim; ++c) {
        t.record(grads.stages[s].d_lambda[c],
                 central_difference(stages[s].filter.lambda[c], opt.step, loss));
      }
      for (std::size_t i = 0; i < stages[s].mlp.parameter_count(); ++i) {
        t.record(grads.stages[s].d_mlp.parameter(i),
                 central_difference(stages[s].mlp.parameter(i), opt.step, loss));
      }
    }
  }
  return t.entry;
}

}  // namespace

GradientCheckReport run_gradient_battery(const GradientCheckOptions& options,
                                         const GradientOps& ops) {
  GradientCheckReport report;
  Rng rng(options.seed);
  report.entries.push_back(check_scf(options, ops, rng));
  report.entries.push_back(check_pdt(options, rng));
  report.entries.push_back(check_pdaf(options, rng));
  report.entries.push_back(check_contrastive(options, rng));
  report.entries.push_back(check_filter_stack(options, rng));
  for (auto& e : report.entries) e.passed = e.max_error < options.tolerance;
  return report;
}

}  // namespace noisecal
