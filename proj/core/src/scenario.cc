#include "noisecal/scenario.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "noisecal/clustering.h"
#include "noisecal/error.h"

namespace noisecal {

namespace {

struct SlotLayout {
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t slot_w = 0;  // cells
  std::size_t slot_h = 0;
};

SlotLayout slot_layout(const ScenarioConfig& cfg) {
  SlotLayout s;
  s.cols = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(cfg.instances_per_image))));
  s.rows = (cfg.instances_per_image + s.cols - 1) / s.cols;
  s.slot_w = cfg.grid / s.cols;
  s.slot_h = cfg.grid / s.rows;
  return s;
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (;;) {
    for (double& x : v) x = normal(rng);
    if (l2_norm(v) > 1e-9) return l2_normalized(v);
  }
}

std::vector<std::vector<double>> draw_centers(const ScenarioConfig& cfg,
                                              std::mt19937_64& rng) {
  constexpr int kMaxAttempts = 10000;
  std::vector<std::vector<double>> centers;
  int attempts = 0;
  while (centers.size() < cfg.identities) {
    if (++attempts > kMaxAttempts) {
      throw ConfigError("cannot place " + std::to_string(cfg.identities) +
                        " identity centres at cosine distance >= " +
                        std::to_string(cfg.min_center_distance) + " in " +
                        std::to_string(cfg.feature_dim) + " dimensions");
    }
    auto candidate = random_unit(rng, cfg.feature_dim);
    const bool separated = std::all_of(
        centers.begin(), centers.end(), [&](const std::vector<double>& c) {
          return 1.0 - dot(c, candidate) >= cfg.min_center_distance;
        });
    if (separated) centers.push_back(std::move(candidate));
  }
  return centers;
}

std::vector<double> jitter(const std::vector<double>& center, double noise,
                           std::mt19937_64& rng) {
  if (noise == 0.0) return center;
  std::normal_distribution<double> normal(
      0.0, noise / std::sqrt(static_cast<double>(center.size())));
  std::vector<double> v(center);
  for (double& x : v) x += normal(rng);
  return l2_normalized(v);
}

BoundingBox jitter_box(const BoundingBox& box, double noise, double limit,
                       std::mt19937_64& rng) {
  if (noise == 0.0) return box;
  std::normal_distribution<double> nx(0.0, noise * box.width());
  std::normal_distribution<double> ny(0.0, noise * box.height());
  for (;;) {
    BoundingBox b{std::clamp(box.x1 + nx(rng), 0.0, limit),
                  std::clamp(box.y1 + ny(rng), 0.0, limit),
                  std::clamp(box.x2 + nx(rng), 0.0, limit),
                  std::clamp(box.y2 + ny(rng), 0.0, limit)};
    if (b.width() >= 0.5 * box.width() && b.height() >= 0.5 * box.height()) {
      return b;
    }
  }
}

void paint_background(FeatureMap& map, std::size_t dim, double level,
                      std::mt19937_64& rng) {
  if (level == 0.0) return;
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  for (std::size_t h = 0; h < map.height(); ++h) {
    for (std::size_t w = 0; w < map.width(); ++w) {
      const auto dir = random_unit(rng, dim);
      const double s = level * scale(rng);
      for (std::size_t d = 0; d < dim; ++d) {
        map.at(h, w, d) += s * std::max(dir[d], 0.0);
        map.at(h, w, dim + d) += s * std::max(-dir[d], 0.0);
      }
    }
  }
}

void paint_scene_bias(FeatureMap& map, std::size_t dim, double level,
                      std::mt19937_64& rng) {
  if (level == 0.0) return;
  const auto dir = random_unit(rng, dim);
  for (std::size_t h = 0; h < map.height(); ++h) {
    for (std::size_t w = 0; w < map.width(); ++w) {
      for (std::size_t d = 0; d < dim; ++d) {
        map.at(h, w, d) += level * std::max(dir[d], 0.0);
        map.at(h, w, dim + d) += level * std::max(-dir[d], 0.0);
      }
    }
  }
}

// Draws a box inside the slot (one-cell margin), paints the latent, and
// returns the box in pixel coordinates.
BoundingBox paint_instance(FeatureMap& map, const ScenarioConfig& cfg,
                           const SlotLayout& layout, std::size_t slot,
                           const std::vector<double>& latent,
                           std::mt19937_64& rng) {
  const std::size_t col = slot % layout.cols;
  const std::size_t row = slot / layout.cols;
  auto extent = [&](std::size_t slot_size) {
    const std::size_t hi = slot_size - 2;
    const std::size_t lo = std::max<std::size_t>(1, slot_size / 2);
    return std::uniform_int_distribution<std::size_t>(std::min(lo, hi), hi)(rng);
  };
  const std::size_t bw = extent(layout.slot_w);
  const std::size_t bh = extent(layout.slot_h);
  const std::size_t x0 = col * layout.slot_w +
      std::uniform_int_distribution<std::size_t>(1, layout.slot_w - 1 - bw)(rng);
  const std::size_t y0 = row * layout.slot_h +
      std::uniform_int_distribution<std::size_t>(1, layout.slot_h - 1 - bh)(rng);

  std::uniform_real_distribution<double> texture(0.8, 1.2);
  const double contrast =
      std::uniform_real_distribution<double>(cfg.contrast_min, 1.0)(rng);
  const std::size_t dim = cfg.feature_dim;
  for (std::size_t h = y0; h < y0 + bh; ++h) {
    for (std::size_t w = x0; w < x0 + bw; ++w) {
      const double t = contrast * texture(rng);
      for (std::size_t d = 0; d < dim; ++d) {
        map.at(h, w, d) += t * std::max(latent[d], 0.0);
        map.at(h, w, dim + d) += t * std::max(-latent[d], 0.0);
      }
    }
  }
  const double cs = cfg.cell_size;
  return make_box(x0 * cs, y0 * cs, (x0 + bw) * cs, (y0 + bh) * cs);
}

// Lays the given instances out over images, slot by slot, in a random order.
InstanceSet render(const ScenarioConfig& cfg,
                   std::vector<SyntheticInstance> instances,
                   std::mt19937_64& rng) {
  const SlotLayout layout = slot_layout(cfg);
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  InstanceSet set;
  const double limit = static_cast<double>(cfg.grid) * cfg.cell_size;
  for (std::size_t start = 0; start < order.size(); start += cfg.instances_per_image) {
    SyntheticImage image;
    image.image_id = static_cast<int>(set.images.size());
    image.map = FeatureMap(cfg.grid, cfg.grid, cfg.channels());
    paint_background(image.map, cfg.feature_dim, cfg.background_level, rng);
    paint_scene_bias(image.map, cfg.feature_dim, cfg.scene_bias, rng);
    const std::size_t end = std::min(order.size(), start + cfg.instances_per_image);
    for (std::size_t slot = 0; start + slot < end; ++slot) {
      const std::size_t idx = order[start + slot];
      SyntheticInstance& inst = instances[idx];
      inst.image_id = image.image_id;
      inst.true_box = paint_instance(image.map, cfg, layout, slot, inst.latent, rng);
      inst.pseudo_box = jitter_box(inst.true_box, cfg.box_noise, limit, rng);
      image.instances.push_back(idx);
    }
    set.images.push_back(std::move(image));
  }
  set.instances = std::move(instances);
  return set;
}

}  // namespace

std::size_t ScenarioConfig::clutter_count() const {
  return static_cast<std::size_t>(
      std::floor(clutter_rate * static_cast<double>(instances)));
}

std::size_t ScenarioConfig::contaminated_count() const {
  return static_cast<std::size_t>(
      std::floor(contamination * static_cast<double>(instances)));
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("scenario: " + msg); };
  if (identities < 1) fail("identities must be >= 1");
  if (instances < identities) {
    fail("identities (" + std::to_string(identities) + ") exceed instances (" +
         std::to_string(instances) + ")");
  }
  if (feature_dim < 2) fail("feature_dim must be >= 2");
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) fail("feature_noise must be >= 0");
  if (!(box_noise >= 0.0) || !std::isfinite(box_noise)) fail("box_noise must be >= 0");
  if (!(contamination >= 0.0 && contamination < 1.0)) fail("contamination must lie in [0, 1)");
  if (!(clutter_rate >= 0.0 && clutter_rate < 1.0)) fail("clutter_rate must lie in [0, 1)");
  if (contaminated_count() > 0 && identities < 2) {
    fail("contamination needs at least two identities");
  }
  if (!(clutter_amplitude > 0.0)) fail("clutter_amplitude must be > 0");
  if (!(background_level >= 0.0) || !std::isfinite(background_level)) {
    fail("background_level must be >= 0");
  }
  if (!(contrast_min > 0.0 && contrast_min <= 1.0)) fail("contrast_min must lie in (0, 1]");
  if (!(scene_bias >= 0.0) || !std::isfinite(scene_bias)) fail("scene_bias must be >= 0");
  if (!(min_center_distance >= 0.0 && min_center_distance <= 2.0)) {
    fail("min_center_distance must lie in [0, 2]");
  }
  if (instances_per_image < 1) fail("instances_per_image must be >= 1");
  if (!(cell_size > 0.0)) fail("cell_size must be > 0");
  const SlotLayout layout = slot_layout(*this);
  if (layout.slot_w < 4 || layout.slot_h < 4) {
    fail("grid " + std::to_string(grid) + " too small for " +
         std::to_string(instances_per_image) + " slots of at least 4x4 cells");
  }
}

SyntheticDataset generate_scenario(const ScenarioConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);

  SyntheticDataset data;
  data.config = config;
  data.centers = draw_centers(config, rng);
  const int g = static_cast<int>(config.identities);

  // Balanced identity counts.
  std::vector<SyntheticInstance> people(config.instances);
  for (std::size_t i = 0; i < people.size(); ++i) {
    people[i].identity = static_cast<int>(i % config.identities);
    people[i].feature_identity = people[i].identity;
  }

  std::vector<std::size_t> picks(people.size());
  std::iota(picks.begin(), picks.end(), 0);
  std::shuffle(picks.begin(), picks.end(), rng);
  std::uniform_int_distribution<int> other(1, std::max(1, g - 1));
  for (std::size_t n = 0; n < config.contaminated_count(); ++n) {
    auto& inst = people[picks[n]];
    inst.feature_identity = (inst.identity + other(rng)) % g;
  }
  for (auto& inst : people) {
    inst.latent = jitter(data.centers[static_cast<std::size_t>(inst.feature_identity)],
                         config.feature_noise, rng);
  }

  std::vector<SyntheticInstance> train = people;
  for (std::size_t n = 0; n < config.clutter_count(); ++n) {
    SyntheticInstance clutter;
    clutter.latent = random_unit(rng, config.feature_dim);
    for (double& x : clutter.latent) x *= config.clutter_amplitude;
    train.push_back(std::move(clutter));
  }
  data.train = render(config, std::move(train), rng);

  std::vector<SyntheticInstance> heldout;
  for (std::size_t id = 0; id < config.identities; ++id) {
    for (std::size_t n = 0; n < config.heldout_per_identity; ++n) {
      SyntheticInstance inst;
      inst.identity = inst.feature_identity = static_cast<int>(id);
      inst.latent = jitter(data.centers[id], config.feature_noise, rng);
      heldout.push_back(std::move(inst));
    }
  }
  data.heldout = render(config, std::move(heldout), rng);
  return data;
}

}  // namespace noisecal
