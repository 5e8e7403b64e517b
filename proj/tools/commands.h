#ifndef NOISECAL_TOOLS_COMMANDS_H_
#define NOISECAL_TOOLS_COMMANDS_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "noisecal/gradcheck.h"
#include "noisecal/metrics.h"
#include "run_config.h"

namespace noisecal::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure or failed check
inline constexpr int kExitUsage = 2;    // bad flags or config

// Header: epoch,purity,ari,retrieval_acc,mean_loss,filtered_clutter_rate
void write_metrics_csv(std::ostream& out, std::span<const CalibrationMetrics> epochs);

/// Runs the configured experiment and writes into config.out_dir:
///   metrics.csv      one row per epoch (write_metrics_csv)
///   assignments.csv  epoch,instance,image_id,identity,filtered,label
///   summary.json     config text, every metric of every epoch, final K and D
///   proxies.tensor / proxies.json   the final proxy dictionary
int cmd_run(const RunConfig& config, std::ostream& out);

// Prints one line per checked operation and the overall max error. Returns
// kExitFailure naming the offending operation when a tolerance is breached.
int cmd_check_gradients(std::uint64_t seed, std::size_t trials, std::ostream& out,
                        const GradientOps& ops = {});

struct AblationSpec {
  std::string name;
  bool pdt = true;
  bool scf = true;
  bool cpr = true;
};

// The six component combinations in Table 2 order, all-on last.
std::vector<AblationSpec> ablation_layout();

struct AblationResult {
  AblationSpec spec;
  std::vector<CalibrationMetrics> epochs;
};

// Same seed for every row; rows run concurrently on config threads.
std::vector<AblationResult> run_ablation(const RunConfig& config);

// Writes ablation.csv (final epoch per row) and ablation_epochs.csv.
int cmd_ablate(const RunConfig& config, std::ostream& out);

// Saves the canonical tensors of one training image before and after every
// filter stage, as image<i>_stage<s>.tensor under out_dir/activations.
// With `trained`, the filter is taken after the configured epochs.
int cmd_dump_activations(const RunConfig& config, std::size_t image, bool trained,
                         std::ostream& out);

// Full command line, CLI11-parsed. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace noisecal::cli

#endif  // NOISECAL_TOOLS_COMMANDS_H_
