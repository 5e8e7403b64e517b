#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "noisecal/error.h"

namespace noisecal::cli {

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  std::optional<double> eps;
  std::optional<std::size_t> min_samples;
  std::optional<double> gamma;
  std::optional<double> m;
  std::optional<double> temperature;
};

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config ? load_run_config(*o.config) : default_run_config();
  PipelineConfig& p = c.pipeline;
  if (o.seed) p.seed = *o.seed;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.threads) p.training.threads = *o.threads;
  if (o.eps) p.dbscan.eps = *o.eps;
  if (o.min_samples) p.dbscan.min_samples = *o.min_samples;
  if (o.gamma) p.cpr.momentum = *o.gamma;
  if (o.m) p.cpr.smoothing = *o.m;
  if (o.temperature) p.cpr.temperature = *o.temperature;
  p.validate();
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise-calibration harness: perception-driven filtering and "
               "cluster proxy memory on synthetic pseudo-labels",
               "noisecal"};
  app.require_subcommand(1);

  Overrides o;
  app.add_option("--config", o.config, "Config file; defaults table when omitted");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--out-dir", o.out_dir, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--eps", o.eps, "DBSCAN cosine-distance radius");
  app.add_option("--min-samples", o.min_samples, "DBSCAN density floor");
  app.add_option("--gamma", o.gamma, "Online proxy momentum");
  app.add_option("--m", o.m, "Offline proxy smoothing");
  app.add_option("--temperature", o.temperature, "Contrastive temperature");

  auto* run = app.add_subcommand("run", "Train and write metrics, assignments, summary, proxies");
  run->fallthrough();

  std::size_t trials = 10000;
  auto* grad = app.add_subcommand("check-gradients",
                                  "Finite-difference check of every analytic gradient");
  grad->fallthrough();
  grad->add_option("--trials", trials, "Samples per operation")->check(CLI::PositiveNumber);

  auto* ablate = app.add_subcommand("ablate", "Six component combinations on one seed");
  ablate->fallthrough();

  std::size_t image = 0;
  bool trained = false;
  auto* dump = app.add_subcommand("dump-activations", "Save one image's maps at every stage");
  dump->fallthrough();
  dump->add_option("--image", image, "Training image index");
  dump->add_flag("--trained", trained, "Use the filter after training");

  auto* show = app.add_subcommand("show-config", "Print the resolved config");
  show->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*grad) {
      return cmd_check_gradients(o.seed.value_or(1), trials, out);
    }
    const RunConfig config = resolve(o);
    if (*run) return cmd_run(config, out);
    if (*ablate) return cmd_ablate(config, out);
    if (*dump) return cmd_dump_activations(config, image, trained, out);
    out << format_run_config(config);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace noisecal::cli
