#include "commands.h"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "noisecal/error.h"
#include "noisecal/parallel.h"
#include "noisecal/proxy_memory.h"
#include "noisecal/tensor_io.h"

namespace noisecal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw PipelineError("cannot write '" + path.string() + "'");
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw PipelineError("cannot create directory '" + dir.string() + "': " + ec.message());
  }
}

json metrics_json(const CalibrationMetrics& m) {
  return {{"epoch", m.epoch},
          {"purity", m.purity},
          {"ari", m.ari},
          {"retrieval_acc", m.retrieval_accuracy},
          {"mean_loss", m.mean_loss},
          {"filtered_clutter_rate", m.filtered_clutter_rate},
          {"foreground_zero_rate", m.foreground_zero_rate},
          {"num_clusters", m.num_clusters},
          {"clustered", m.clustered},
          {"proxy_storage", m.proxy_storage}};
}

void write_assignments(std::ostream& out, const InstanceSet& set,
                       const PseudoLabeledDataset& labels, bool header) {
  if (header) out << "epoch,instance,image_id,identity,filtered,label\n";
  std::vector<int> label(set.instances.size(), kNoise);
  std::vector<bool> kept(set.instances.size(), false);
  for (std::size_t o = 0; o < labels.instance_index.size(); ++o) {
    label[labels.instance_index[o]] = labels.assignment.labels[o];
    kept[labels.instance_index[o]] = true;
  }
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    const auto& inst = set.instances[i];
    out << labels.epoch << ',' << i << ',' << inst.image_id << ',' << inst.identity << ','
        << (kept[i] ? 0 : 1) << ',' << label[i] << '\n';
  }
}

PipelineConfig with_components(PipelineConfig config, const AblationSpec& spec) {
  config.filter.perception_driven = spec.pdt;
  config.filter.self_calibrating = spec.scf;
  config.cpr_enabled = spec.cpr;
  config.training.threads = 1;
  return config;
}

SyntheticDataset scenario_for(const PipelineConfig& config) {
  ScenarioConfig scenario = config.scenario;
  scenario.seed = config.seed;
  return generate_scenario(scenario);
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const CalibrationMetrics> epochs) {
  out << "epoch,purity,ari,retrieval_acc,mean_loss,filtered_clutter_rate\n";
  for (const auto& m : epochs) {
    out << m.epoch << ',' << format_double(m.purity) << ',' << format_double(m.ari) << ','
        << format_double(m.retrieval_accuracy) << ',' << format_double(m.mean_loss) << ','
        << format_double(m.filtered_clutter_rate) << '\n';
  }
}

int cmd_run(const RunConfig& config, std::ostream& out) {
  config.pipeline.validate();
  prepare_dir(config.out_dir);

  const SyntheticDataset data = scenario_for(config.pipeline);
  TrainingState state = initial_state(config.pipeline);
  std::vector<CalibrationMetrics> epochs;

  std::ofstream assignments = open_output(config.out_dir / "assignments.csv");
  for (std::size_t e = 0; e < config.pipeline.training.epochs; ++e) {
    PseudoLabeledDataset labels;
    epochs.push_back(run_epoch(data, state, config.pipeline, &labels));
    write_assignments(assignments, data.train, labels, e == 0);
    const auto& m = epochs.back();
    out << "epoch " << m.epoch << ": purity " << format_double(m.purity) << " ari "
        << format_double(m.ari) << " retrieval " << format_double(m.retrieval_accuracy)
        << " clusters " << m.num_clusters << '\n';
  }

  std::ofstream metrics = open_output(config.out_dir / "metrics.csv");
  write_metrics_csv(metrics, epochs);

  json summary;
  summary["seed"] = config.pipeline.seed;
  summary["config"] = format_run_config(config);
  summary["epochs"] = json::array();
  for (const auto& m : epochs) summary["epochs"].push_back(metrics_json(m));
  if (!epochs.empty()) summary["final"] = metrics_json(epochs.back());
  if (state.memory) {
    summary["proxies"] = {{"count", state.memory->size()}, {"dim", state.memory->dim()}};
    save_dictionary(*state.memory, config.out_dir / "proxies");
  }
  open_output(config.out_dir / "summary.json") << summary.dump(2) << '\n';

  out << "wrote " << config.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_check_gradients(std::uint64_t seed, std::size_t trials, std::ostream& out,
                        const GradientOps& ops) {
  GradientCheckOptions options;
  options.seed = seed;
  options.min_points = trials;
  const GradientCheckReport report = run_gradient_battery(options, ops);
  for (const auto& e : report.entries) {
    out << (e.passed ? "ok   " : "FAIL ") << e.name << ": " << e.points
        << " points, max error " << format_double(e.max_error) << '\n';
  }
  out << "max error " << format_double(report.max_error()) << " (tolerance "
      << format_double(options.tolerance) << ")\n";
  if (!report.passed()) {
    for (const auto& e : report.entries) {
      if (!e.passed) out << "gradient check failed: " << e.name << '\n';
    }
    return kExitFailure;
  }
  return kExitOk;
}

std::vector<AblationSpec> ablation_layout() {
  return {{"no_pdt", false, true, true},
          {"no_scf", true, false, true},
          {"no_pdt_scf", false, false, true},
          {"no_cpr", true, true, false},
          {"none", false, false, false},
          {"all", true, true, true}};
}

std::vector<AblationResult> run_ablation(const RunConfig& config) {
  config.pipeline.validate();
  const auto layout = ablation_layout();
  std::vector<AblationResult> results(layout.size());
  parallel_for(layout.size(), config.pipeline.training.threads, [&](std::size_t i) {
    results[i].spec = layout[i];
    results[i].epochs = run_experiment(with_components(config.pipeline, layout[i])).epochs;
  });
  return results;
}

int cmd_ablate(const RunConfig& config, std::ostream& out) {
  prepare_dir(config.out_dir);
  const auto results = run_ablation(config);

  std::ofstream table = open_output(config.out_dir / "ablation.csv");
  std::ofstream detail = open_output(config.out_dir / "ablation_epochs.csv");
  table << "row,pdt,scf,cpr,purity,ari,retrieval_acc,mean_loss,filtered_clutter_rate\n";
  detail << "row,epoch,purity,ari,retrieval_acc,mean_loss,filtered_clutter_rate\n";
  for (const auto& r : results) {
    const auto& f = r.epochs.back();
    table << r.spec.name << ',' << r.spec.pdt << ',' << r.spec.scf << ',' << r.spec.cpr << ','
          << format_double(f.purity) << ',' << format_double(f.ari) << ','
          << format_double(f.retrieval_accuracy) << ',' << format_double(f.mean_loss) << ','
          << format_double(f.filtered_clutter_rate) << '\n';
    for (const auto& m : r.epochs) {
      detail << r.spec.name << ',' << m.epoch << ',' << format_double(m.purity) << ','
             << format_double(m.ari) << ',' << format_double(m.retrieval_accuracy) << ','
             << format_double(m.mean_loss) << ',' << format_double(m.filtered_clutter_rate)
             << '\n';
    }
    out << r.spec.name << ": purity " << format_double(f.purity) << " retrieval "
        << format_double(f.retrieval_accuracy) << '\n';
  }
  out << "wrote " << (config.out_dir / "ablation.csv").string() << '\n';
  return kExitOk;
}

int cmd_dump_activations(const RunConfig& config, std::size_t image, bool trained,
                         std::ostream& out) {
  config.pipeline.validate();
  const SyntheticDataset data = scenario_for(config.pipeline);
  if (image >= data.train.images.size()) {
    throw UsageError("image " + std::to_string(image) + " out of range (" +
                     std::to_string(data.train.images.size()) + " training images)");
  }
  TrainingState state = initial_state(config.pipeline);
  if (trained) {
    for (std::size_t e = 0; e < config.pipeline.training.epochs; ++e) {
      run_epoch(data, state, config.pipeline);
    }
  }

  const fs::path dir = config.out_dir / "activations";
  prepare_dir(dir);
  const StackForward fwd = state.filter.forward(data.train.images[image].map);
  std::vector<const FeatureMap*> maps;
  for (const auto& c : fwd.caches) maps.push_back(&c.input);
  if (maps.empty()) maps.push_back(&data.train.images[image].map);
  maps.push_back(&fwd.output);

  const std::string stem = "image" + std::to_string(image) + "_stage";
  for (std::size_t s = 0; s < maps.size(); ++s) {
    const fs::path path = dir / (stem + std::to_string(s) + ".tensor");
    save_tensor(path, *maps[s]);
    out << path.string() << '\n';
  }
  return kExitOk;
}

}  // namespace noisecal::cli
