#include "noisecal/feature_map.h"

#include <cmath>
#include <string>

#include "noisecal/error.h"

namespace noisecal {

FeatureMap::FeatureMap(std::size_t height, std::size_t width,
                       std::size_t channels, double fill)
    : height_(height),
      width_(width),
      channels_(channels),
      data_(height * width * channels, fill) {
  if (height == 0 || width == 0 || channels == 0) {
    throw ConfigError("FeatureMap extents must be positive, got " +
                      std::to_string(height) + "x" + std::to_string(width) +
                      "x" + std::to_string(channels));
  }
}

FeatureMap FeatureMap::from_canonical(std::size_t height, std::size_t width,
                                      std::size_t channels,
                                      std::span<const double> hwc_values) {
  FeatureMap map(height, width, channels);
  if (hwc_values.size() != map.size()) {
    throw ConfigError("FeatureMap expects " + std::to_string(map.size()) +
                      " values, got " + std::to_string(hwc_values.size()));
  }
  std::size_t i = 0;
  for (std::size_t h = 0; h < height; ++h) {
    for (std::size_t w = 0; w < width; ++w) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = hwc_values[i++];
        if (!std::isfinite(v)) {
          throw ConfigError("FeatureMap value at (" + std::to_string(h) + "," +
                            std::to_string(w) + "," + std::to_string(c) +
                            ") is not finite");
        }
        map.at(h, w, c) = v;
      }
    }
  }
  return map;
}

std::vector<double> FeatureMap::to_canonical() const {
  std::vector<double> out;
  out.reserve(data_.size());
  for (std::size_t h = 0; h < height_; ++h) {
    for (std::size_t w = 0; w < width_; ++w) {
      for (std::size_t c = 0; c < channels_; ++c) out.push_back(at(h, w, c));
    }
  }
  return out;
}

bool FeatureMap::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace noisecal
