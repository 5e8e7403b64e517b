#include "run_config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>

#include "noisecal/error.h"
#include "noisecal/tensor_io.h"

namespace noisecal::cli {

namespace {

struct Field {
  ConfigKey name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
Field real_field(std::string section, std::string key, std::string help, Access access) {
  return {{std::move(section), std::move(key), std::move(help)},
          [access](RunConfig& c, std::string_view text) {
            double v = 0.0;
            const auto* end = text.data() + text.size();
            const auto [ptr, ec] = std::from_chars(text.data(), end, v);
            if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
              throw ConfigError("expected a finite number, got '" + std::string(text) + "'");
            }
            access(c) = v;
          },
          [access](const RunConfig& c) {
            return format_double(access(c));
          }};
}

template <typename Access>
Field count_field(std::string section, std::string key, std::string help, Access access) {
  return {{std::move(section), std::move(key), std::move(help)},
          [access](RunConfig& c, std::string_view text) {
            using T = std::remove_cvref_t<decltype(access(c))>;
            T v{};
            const auto* end = text.data() + text.size();
            const auto [ptr, ec] = std::from_chars(text.data(), end, v);
            if (ec != std::errc() || ptr != end) {
              throw ConfigError("expected a non-negative integer, got '" +
                                std::string(text) + "'");
            }
            access(c) = v;
          },
          [access](const RunConfig& c) {
            return std::to_string(access(c));
          }};
}

template <typename Access>
Field flag_field(std::string section, std::string key, std::string help, Access access) {
  return {{std::move(section), std::move(key), std::move(help)},
          [access](RunConfig& c, std::string_view text) {
            if (text == "true") {
              access(c) = true;
            } else if (text == "false") {
              access(c) = false;
            } else {
              throw ConfigError("expected true or false, got '" + std::string(text) + "'");
            }
          },
          [access](const RunConfig& c) {
            return std::string(access(c) ? "true" : "false");
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto sc = [](auto& c) -> auto& { return c.pipeline.scenario; };
    f.push_back(count_field("scenario", "identities", "hidden identity count G",
                            [sc](auto& c) -> auto& { return sc(c).identities; }));
    f.push_back(count_field("scenario", "instances", "identity instances N, clutter excluded",
                            [sc](auto& c) -> auto& { return sc(c).instances; }));
    f.push_back(count_field("scenario", "feature_dim", "latent dimension D (maps carry 2D channels)",
                            [sc](auto& c) -> auto& { return sc(c).feature_dim; }));
    f.push_back(real_field("scenario", "feature_noise", "angular jitter of latents",
                           [sc](auto& c) -> auto& { return sc(c).feature_noise; }));
    f.push_back(real_field("scenario", "box_noise", "pseudo-box corner jitter, fraction of box size",
                           [sc](auto& c) -> auto& { return sc(c).box_noise; }));
    f.push_back(real_field("scenario", "contamination", "fraction rho painted with another identity",
                           [sc](auto& c) -> auto& { return sc(c).contamination; }));
    f.push_back(real_field("scenario", "clutter_rate", "clutter detections per identity instance",
                           [sc](auto& c) -> auto& { return sc(c).clutter_rate; }));
    f.push_back(real_field("scenario", "clutter_amplitude", "latent norm of clutter",
                           [sc](auto& c) -> auto& { return sc(c).clutter_amplitude; }));
    f.push_back(real_field("scenario", "background_level", "per-cell background activation",
                           [sc](auto& c) -> auto& { return sc(c).background_level; }));
    f.push_back(real_field("scenario", "scene_bias", "per-image uniform activation offset",
                           [sc](auto& c) -> auto& { return sc(c).scene_bias; }));
    f.push_back(real_field("scenario", "contrast_min", "lower end of per-instance contrast",
                           [sc](auto& c) -> auto& { return sc(c).contrast_min; }));
    f.push_back(real_field("scenario", "min_center_distance", "cosine distance between identity centres",
                           [sc](auto& c) -> auto& { return sc(c).min_center_distance; }));
    f.push_back(count_field("scenario", "instances_per_image", "slots per image",
                            [sc](auto& c) -> auto& { return sc(c).instances_per_image; }));
    f.push_back(count_field("scenario", "grid", "map height and width in cells",
                            [sc](auto& c) -> auto& { return sc(c).grid; }));
    f.push_back(real_field("scenario", "cell_size", "pixels per map cell",
                           [sc](auto& c) -> auto& { return sc(c).cell_size; }));
    f.push_back(count_field("scenario", "heldout_per_identity", "clean retrieval queries per identity",
                            [sc](auto& c) -> auto& { return sc(c).heldout_per_identity; }));

    f.push_back(real_field("dbscan", "eps", "cosine-distance radius",
                           [](auto& c) -> auto& { return c.pipeline.dbscan.eps; }));
    f.push_back(count_field("dbscan", "min_samples", "density floor, self included",
                            [](auto& c) -> auto& { return c.pipeline.dbscan.min_samples; }));

    f.push_back(flag_field("cpr", "enabled", "false runs plain per-epoch re-init (m = 0, gamma = 1)",
                           [](auto& c) -> auto& { return c.pipeline.cpr_enabled; }));
    f.push_back(real_field("cpr", "momentum", "online update factor gamma",
                           [](auto& c) -> auto& { return c.pipeline.cpr.momentum; }));
    f.push_back(real_field("cpr", "smoothing", "offline EMA factor m",
                           [](auto& c) -> auto& { return c.pipeline.cpr.smoothing; }));
    f.push_back(real_field("cpr", "temperature", "contrastive loss temperature",
                           [](auto& c) -> auto& { return c.pipeline.cpr.temperature; }));

    f.push_back(count_field("filter", "stages", "stacked PDAF applications",
                            [](auto& c) -> auto& { return c.pipeline.filter.stages; }));
    f.push_back(count_field("filter", "reduction", "MLP reduction ratio r",
                            [](auto& c) -> auto& { return c.pipeline.filter.reduction; }));
    f.push_back(flag_field("filter", "perception_driven", "false thresholds at the channel average",
                           [](auto& c) -> auto& { return c.pipeline.filter.perception_driven; }));
    f.push_back(flag_field("filter", "self_calibrating", "false pins lambda at 0 (soft threshold)",
                           [](auto& c) -> auto& { return c.pipeline.filter.self_calibrating; }));
    f.push_back(real_field("filter", "lambda_init", "initial lambda for every channel",
                           [](auto& c) -> auto& { return c.pipeline.filter.lambda_init; }));
    f.push_back(real_field("filter", "mlp_init_scale", "std of the first MLP layer at init",
                           [](auto& c) -> auto& { return c.pipeline.filter.mlp_init_scale; }));

    f.push_back(count_field("training", "epochs", "alternating epochs",
                            [](auto& c) -> auto& { return c.pipeline.training.epochs; }));
    f.push_back(count_field("training", "frozen_epochs", "leading epochs without filter updates",
                            [](auto& c) -> auto& { return c.pipeline.training.frozen_epochs; }));
    f.push_back(real_field("training", "learning_rate", "SGD step for lambda and the MLP",
                           [](auto& c) -> auto& { return c.pipeline.training.learning_rate; }));
    f.push_back(count_field("training", "batch_size", "instances per step",
                            [](auto& c) -> auto& { return c.pipeline.training.batch_size; }));
    f.push_back(count_field("training", "threads", "worker threads for feature extraction",
                            [](auto& c) -> auto& { return c.pipeline.training.threads; }));

    f.push_back(count_field("run", "seed", "master seed for every random stream",
                            [](auto& c) -> auto& { return c.pipeline.seed; }));
    f.push_back({{"run", "out_dir", "output directory"},
                 [](RunConfig& c, std::string_view text) {
                   if (text.empty()) throw ConfigError("out_dir must not be empty");
                   c.out_dir = std::string(text);
                 },
                 [](const RunConfig& c) { return c.out_dir.string(); }});
    return f;
  }();
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  ScenarioConfig& s = c.pipeline.scenario;
  s.background_level = 0.0;
  s.scene_bias = 2.5;
  s.contrast_min = 1.0;
  c.pipeline.dbscan.eps = 0.2;
  c.pipeline.cpr.temperature = 0.2;
  c.pipeline.training.learning_rate = 0.3;
  return c;
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  RunConfig config = default_run_config();
  std::set<std::string> sections;
  for (const auto& f : fields()) sections.insert(f.name.section);

  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!sections.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail("missing key before '='");
    if (section.empty()) fail("key '" + key + "' appears before any [section]");

    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (f.name.section == section && f.name.key == key) field = &f;
    }
    if (!field) fail("unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert({section, key}).second) {
      fail("duplicate key '" + key + "' in [" + section + "]");
    }
    if (value.empty()) fail("missing value for '" + key + "'");
    try {
      field->set(config, value);
    } catch (const ConfigError& e) {
      fail(key + ": " + e.what());
    }
  }

  try {
    config.pipeline.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_run_config(in, path.string());
}

std::string format_run_config(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.name.section != section) {
      if (!section.empty()) out << '\n';
      section = f.name.section;
      out << '[' << section << "]\n";
    }
    out << f.name.key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

std::vector<ConfigKey> config_keys() {
  std::vector<ConfigKey> keys;
  for (const auto& f : fields()) keys.push_back(f.name);
  return keys;
}

}  // namespace noisecal::cli
