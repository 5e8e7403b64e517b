#include "noisecal/tensor_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "noisecal/error.h"

namespace noisecal {

namespace {

constexpr const char* kMagic = "noisecal-tensor";
constexpr int kVersion = 1;

std::string expect_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError(std::string("tensor: missing ") + what + " line");
  }
  return line;
}

double parse_double(const std::string& text, std::size_t index) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw FormatError("tensor: bad value '" + text + "' at index " +
                      std::to_string(index));
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("cannot format double");
  return std::string(buf, ptr);
}

void write_tensor(std::ostream& out, const FeatureMap& map) {
  out << kMagic << ' ' << kVersion << '\n'
      << "shape " << map.height() << ' ' << map.width() << ' '
      << map.channels() << '\n'
      << "dtype f64\n"
      << "order hwc\n";
  for (double v : map.to_canonical()) out << format_double(v) << '\n';
}

FeatureMap read_tensor(std::istream& in) {
  {
    std::istringstream header(expect_line(in, "header"));
    std::string magic;
    int version = 0;
    if (!(header >> magic >> version) || magic != kMagic ||
        version != kVersion) {
      throw FormatError("tensor: unrecognized header");
    }
  }
  std::size_t h = 0, w = 0, c = 0;
  {
    std::istringstream shape(expect_line(in, "shape"));
    std::string key;
    if (!(shape >> key >> h >> w >> c) || key != "shape" || h == 0 || w == 0 ||
        c == 0) {
      throw FormatError("tensor: bad shape line");
    }
  }
  if (expect_line(in, "dtype") != "dtype f64") {
    throw FormatError("tensor: only dtype f64 is supported");
  }
  if (expect_line(in, "order") != "order hwc") {
    throw FormatError("tensor: only order hwc is supported");
  }
  std::vector<double> values;
  values.reserve(h * w * c);
  std::string line;
  while (values.size() < h * w * c && std::getline(in, line)) {
    values.push_back(parse_double(line, values.size()));
  }
  if (values.size() != h * w * c) {
    throw FormatError("tensor: expected " + std::to_string(h * w * c) +
                      " values, found " + std::to_string(values.size()));
  }
  return FeatureMap::from_canonical(h, w, c, values);
}

void save_tensor(const std::filesystem::path& path, const FeatureMap& map) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(out, map);
  if (!out) throw FormatError("failed writing " + path.string());
}

FeatureMap load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace noisecal
