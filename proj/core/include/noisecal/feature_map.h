#ifndef NOISECAL_FEATURE_MAP_H_
#define NOISECAL_FEATURE_MAP_H_

#include <cstddef>
#include <span>
#include <vector>

namespace noisecal {

// One value per channel (a 1x1xC tensor).
using ChannelVector = std::vector<double>;

/// Dense H x W x C activation tensor.
///
/// Storage is planar (one contiguous H*W plane per channel, row-major within
/// the plane) so that per-channel pooling walks contiguous memory. Callers
/// should use the index accessors; the canonical interchange order used by
/// serialization is HWC (height slowest, channel fastest), see to_canonical().
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t height, std::size_t width, std::size_t channels,
             double fill = 0.0);

  // Builds a map from values in canonical HWC order. Throws ConfigError on a
  // size mismatch, zero extent, or non-finite value.
  static FeatureMap from_canonical(std::size_t height, std::size_t width,
                                   std::size_t channels,
                                   std::span<const double> hwc_values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t h, std::size_t w, std::size_t c) {
    return data_[(c * height_ + h) * width_ + w];
  }
  double at(std::size_t h, std::size_t w, std::size_t c) const {
    return data_[(c * height_ + h) * width_ + w];
  }

  // H*W plane of channel c, row-major.
  std::span<double> channel(std::size_t c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  std::vector<double> to_canonical() const;

  bool all_finite() const;
  bool same_shape(const FeatureMap& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

}  // namespace noisecal

#endif  // NOISECAL_FEATURE_MAP_H_
