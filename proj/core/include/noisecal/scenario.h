#ifndef NOISECAL_SCENARIO_H_
#define NOISECAL_SCENARIO_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "noisecal/box.h"
#include "noisecal/feature_map.h"

namespace noisecal {

inline constexpr int kClutterIdentity = -1;

/// Parameters of a synthetic noisy-pseudo-label scene collection.
///
/// Every image is a grid x grid map with 2 * feature_dim channels. Each
/// instance owns one slot of the image and paints its box with
/// relu(+latent) in the first feature_dim channels and relu(-latent) in the
/// rest, mimicking nonnegative backbone activations. Background activations of
/// random direction cover the whole map, and every image adds a scene bias:
/// one random direction painted uniformly over all cells, standing in for
/// camera and illumination shifts between scenes. Each painted instance is
/// scaled by its own contrast, so small or occluded people come out weak.
struct ScenarioConfig {
  std::size_t identities = 10;
  std::size_t instances = 500;  // identity instances, clutter excluded
  std::size_t feature_dim = 16;
  double feature_noise = 0.3;      // angular jitter of latents around centres
  double box_noise = 0.1;          // pseudo-box corner jitter, fraction of box size
  double contamination = 0.15;     // fraction rendered with another identity's look
  double clutter_rate = 0.2;       // clutter instances, as a fraction of `instances`
  double clutter_amplitude = 0.25; // latent norm of clutter instances
  double background_level = 0.35;  // background activation scale
  double scene_bias = 0.0;         // per-image uniform activation offset
  double contrast_min = 1.0;       // instance contrast ~ U(contrast_min, 1)
  double min_center_distance = 0.7;  // pairwise cosine distance between centres
  std::size_t instances_per_image = 4;
  std::size_t grid = 16;
  double cell_size = 8.0;  // pixels per map cell
  std::size_t heldout_per_identity = 20;
  std::uint64_t seed = 7;

  std::size_t channels() const { return 2 * feature_dim; }
  std::size_t clutter_count() const;
  std::size_t contaminated_count() const;
  // Throws ConfigError when a value is out of range or the layout is
  // infeasible (e.g. more identities than instances).
  void validate() const;
};

struct SyntheticInstance {
  int image_id = 0;
  BoundingBox true_box;
  BoundingBox pseudo_box;  // what the detector reports
  int identity = kClutterIdentity;          // hidden ground truth
  int feature_identity = kClutterIdentity;  // identity whose look was painted
  std::vector<double> latent;

  bool is_clutter() const { return identity == kClutterIdentity; }
  bool contaminated() const {
    return !is_clutter() && identity != feature_identity;
  }
};

struct SyntheticImage {
  int image_id = 0;
  FeatureMap map;
  std::vector<std::size_t> instances;  // indices into InstanceSet::instances
};

struct InstanceSet {
  std::vector<SyntheticImage> images;
  std::vector<SyntheticInstance> instances;
};

struct SyntheticDataset {
  ScenarioConfig config;
  std::vector<std::vector<double>> centers;  // one unit vector per identity
  InstanceSet train;    // contaminated, cluttered, unlabeled to the learner
  InstanceSet heldout;  // clean identity instances for retrieval scoring
};

// Deterministic in config (including seed).
SyntheticDataset generate_scenario(const ScenarioConfig& config);

}  // namespace noisecal

#endif  // NOISECAL_SCENARIO_H_
