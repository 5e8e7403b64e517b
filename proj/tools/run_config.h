#ifndef NOISECAL_TOOLS_RUN_CONFIG_H_
#define NOISECAL_TOOLS_RUN_CONFIG_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "noisecal/pipeline.h"

namespace noisecal::cli {

/// Everything one harness run needs.
///
/// default_run_config() is the defaults table: paper values (momentum and
/// smoothing 0.2, lambda init 0, batch size 4) plus the toy scenario the
/// harness is calibrated on.
struct RunConfig {
  PipelineConfig pipeline;
  std::filesystem::path out_dir = "noisecal-out";
};

RunConfig default_run_config();

/// Parses the flat sectioned key-value format:
///
///   # comment
///   [scenario]
///   identities = 10
///
/// Every key must belong to a known section and appear at most once. Errors
/// throw ConfigError prefixed with "<source>:<line>: ". Keys not given keep
/// their default_run_config() values. The result is validated.
RunConfig parse_run_config(std::istream& in, const std::string& source);

// Throws ConfigError naming the path when the file cannot be opened.
RunConfig load_run_config(const std::filesystem::path& path);

// Renders a config in the same format; parse_run_config reads it back to an
// equal config.
std::string format_run_config(const RunConfig& config);

struct ConfigKey {
  std::string section;
  std::string key;
  std::string help;
};

// All accepted keys in file order, for documentation and --help.
std::vector<ConfigKey> config_keys();

}  // namespace noisecal::cli

#endif  // NOISECAL_TOOLS_RUN_CONFIG_H_
