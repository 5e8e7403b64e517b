#ifndef NOISECAL_TENSOR_IO_H_
#define NOISECAL_TENSOR_IO_H_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "noisecal/feature_map.h"

namespace noisecal {

// Canonical text tensor format:
//
//   noisecal-tensor 1
//   shape <H> <W> <C>
//   dtype f64
//   order hwc
//   <H*W*C values, one per line, height slowest and channel fastest>
//
// Values use the shortest decimal form that round-trips to the same double,
// so write -> read is bit-exact.

void write_tensor(std::ostream& out, const FeatureMap& map);
FeatureMap read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const FeatureMap& map);
FeatureMap load_tensor(const std::filesystem::path& path);

// Shortest round-trip decimal representation of v.
std::string format_double(double v);

}  // namespace noisecal

#endif  // NOISECAL_TENSOR_IO_H_
