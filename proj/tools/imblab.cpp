// Config-driven front end: dataset synthesis, ensemble uncertainty, training
// runs, and the analysis suites, all reproducible from (config, seeds).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "imblab/analysis.hpp"
#include "imblab/config.hpp"
#include "imblab/ensemble.hpp"
#include "imblab/io_util.hpp"
#include "imblab/rng.hpp"
#include "imblab/samplers.hpp"

namespace {

using namespace imblab;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  std::size_t jobs = 0;  // 0: take from config
  bool quiet = false;
};

std::filesystem::path resolve_out(const CliConfig& config,
                                  const CliOptions& options) {
  std::string dir = options.out_dir;
  if (dir.empty() && config.output) dir = *config.output;
  if (dir.empty()) {
    throw std::invalid_argument(
        "config: no output directory (set 'output' or pass --out)");
  }
  const std::filesystem::path path(dir);
  if (!std::filesystem::is_directory(path)) {
    throw std::runtime_error("output directory does not exist: " + dir);
  }
  return path;
}

CliConfig load_effective_config(const CliOptions& options) {
  CliConfig config = load_config(options.config_path);
  if (options.seed_override) {
    config.seeds = {*options.seed_override};
  }
  if (config.seeds.empty()) {
    throw std::invalid_argument("config: 'seeds' is required");
  }
  if (options.jobs > 0) config.jobs = options.jobs;
  return config;
}

void require(bool present, const char* section, const char* cmd) {
  if (!present) {
    throw std::invalid_argument(std::string("config: '") + section +
                                "' section is required for " + cmd);
  }
}

int cmd_synth(const CliOptions& options) {
  const CliConfig config = load_effective_config(options);
  require(config.has_dataset, "dataset", "synth");
  const std::filesystem::path out = resolve_out(config, options);

  for (std::uint64_t seed : config.seeds) {
    const Dataset train = build_train_dataset(config.dataset, seed);
    const std::string stem = "dataset_seed" + std::to_string(seed);
    save_dataset_csv(train, out / (stem + ".csv"));
    save_dataset_bin(train, out / (stem + ".bin"));

    const std::vector<std::size_t> counts = class_counts(train);
    nlohmann::ordered_json manifest;
    manifest["config_hash"] = config.hash;
    manifest["seed"] = seed;
    manifest["num_classes"] = train.num_classes;
    manifest["dim"] = train.dim();
    manifest["num_examples"] = train.size();
    manifest["class_counts"] = counts;
    manifest["files"] = {stem + ".csv", stem + ".bin"};
    write_file_atomic(out / (stem + ".manifest.json"), manifest.dump(2) + "\n");

    if (!options.quiet) {
      std::cout << "seed " << seed << " class counts:";
      for (std::size_t n : counts) std::cout << ' ' << n;
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_uncertainty(const CliOptions& options) {
  const CliConfig config = load_effective_config(options);
  require(config.has_dataset, "dataset", "uncertainty");
  require(config.has_model, "model", "uncertainty");
  require(config.has_optim, "optim", "uncertainty");
  require(config.has_ensemble, "ensemble", "uncertainty");
  const std::filesystem::path out = resolve_out(config, options);
  const ExperimentConfig exp = experiment_config(config);

  for (std::uint64_t seed : config.seeds) {
    const Dataset train = build_train_dataset(config.dataset, seed);
    const std::vector<MlpModel> members = train_ensemble(
        train, exp.model, exp.optim, exp.ensemble_epochs, exp.ensemble_members,
        derive_seed(seed, 12), exp.jobs);
    const EnsemblePredictions preds = predict_ensemble(members, train.features);
    const UncertaintyReport report = uncertainty_report(preds, train.labels);

    const std::string stem = "seed" + std::to_string(seed);
    save_predictions_bin(preds, out / ("predictions_" + stem + ".bin"));
    const ImbalanceMeasure measure = uncertainty_measure(report);
    save_measure_csv(measure, out / ("measure_" + stem + ".csv"));
    save_uncertainty_csv(report, out / ("uncertainty_" + stem + ".csv"));
    if (!options.quiet) {
      std::cout << "seed " << seed << " class uncertainty:";
      for (double m : report.class_normalized) std::cout << ' ' << m;
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_train(const CliOptions& options) {
  const CliConfig config = load_effective_config(options);
  require(config.has_dataset, "dataset", "train");
  require(config.has_model, "model", "train");
  require(config.has_optim, "optim", "train");
  require(config.has_train, "train", "train");
  const std::filesystem::path out = resolve_out(config, options);

  const std::vector<Method> methods = standard_methods(
      config.train.epochs, config.train.stage1_epochs, config.train.stage2_epochs);
  const Method& method = find_method(methods, config.train.method);

  ImbalanceMeasure measure;
  if (method.needs_uncertainty) {
    if (!config.train.measure_file) {
      throw std::invalid_argument(
          "config: method '" + method.name +
          "' needs an uncertainty measure; set train.measure_file");
    }
    measure = load_measure_csv(*config.train.measure_file);
  }

  std::vector<double> top1s;
  for (std::uint64_t seed : config.seeds) {
    const Dataset train = build_train_dataset(config.dataset, seed);
    const Dataset test =
        build_test_dataset(config.dataset, config.test_per_class, seed);
    const TrainOutput output = train_run(
        train, config.model, config.optim, method.mitigation,
        derive_seed(seed, 13), method.needs_uncertainty ? &measure : nullptr);
    const EvalMetrics metrics = evaluate(output.model, test);
    const RunResult result =
        make_run_result(metrics, output, seed, config.hash);
    save_run_result(result, out / ("run_seed" + std::to_string(seed) + ".json"));
    top1s.push_back(metrics.top1_error);
    if (!options.quiet) {
      std::cout << "seed " << seed << " top-1 error " << metrics.top1_error
                << "%\n";
    }
  }

  double mean = 0.0;
  for (double t : top1s) mean += t;
  mean /= static_cast<double>(top1s.size());
  double var = 0.0;
  for (double t : top1s) var += (t - mean) * (t - mean);
  const double stdev =
      top1s.size() > 1 ? std::sqrt(var / static_cast<double>(top1s.size() - 1))
                       : 0.0;
  nlohmann::ordered_json aggregate;
  aggregate["config_hash"] = config.hash;
  aggregate["method"] = method.name;
  aggregate["seeds"] = config.seeds;
  aggregate["top1_errors"] = top1s;
  aggregate["mean_top1"] = mean;
  aggregate["std_top1"] = stdev;
  write_file_atomic(out / "aggregate.json", aggregate.dump(2) + "\n");
  if (!options.quiet) {
    std::cout << method.name << " mean top-1 error " << mean << "% (std "
              << stdev << ")\n";
  }
  return 0;
}

int cmd_analyze(const CliOptions& options) {
  const CliConfig config = load_effective_config(options);
  require(config.has_dataset, "dataset", "analyze");
  require(config.has_model, "model", "analyze");
  require(config.has_optim, "optim", "analyze");
  require(config.has_analysis, "analysis", "analyze");
  const std::filesystem::path out = resolve_out(config, options);
  const ExperimentConfig exp = experiment_config(config);

  AnalysisReport report;
  switch (config.analysis.kind) {
    case AnalysisKind::MeasureErrorAlignment:
      report = run_alignment(config.dataset, exp, config.seeds, config.hash);
      break;
    case AnalysisKind::ImbalanceSweep:
      report = run_ir_sweep(config.analysis.ir_list, config.dataset, exp,
                            config.seeds, config.hash);
      break;
    case AnalysisKind::DuplicationSweep:
      report = run_duplication_sweep(config.analysis.strength_list,
                                     config.dataset, exp, config.seeds,
                                     config.hash);
      break;
    case AnalysisKind::MitigationCompare: {
      const std::vector<Method> all = standard_methods(
          config.train.epochs, config.train.stage1_epochs,
          config.train.stage2_epochs);
      std::vector<Method> chosen;
      if (config.analysis.methods.empty()) {
        chosen = all;
      } else {
        for (const std::string& name : config.analysis.methods) {
          chosen.push_back(find_method(all, name));
        }
      }
      report =
          run_mitigation_compare(chosen, config.dataset, exp, config.seeds,
                                 config.hash);
      break;
    }
  }
  save_report(report, out);
  if (!options.quiet) {
    std::cout << to_string(report.kind) << " report written to " << out.string()
              << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-imbalance measurement and mitigation laboratory"};
  app.require_subcommand(1);

  CliOptions options;
  app.add_option("--config", options.config_path, "experiment config file")
      ->required();
  app.add_option("--out", options.out_dir, "output directory");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value,
                                  "replace the config seed list with one seed");
  app.add_option("--jobs", options.jobs, "parallel workers for ensembles");
  app.add_flag("--quiet", options.quiet, "suppress progress output");

  auto* synth = app.add_subcommand("synth", "generate dataset files");
  auto* uncertainty =
      app.add_subcommand("uncertainty", "train an ensemble, dump uncertainty");
  auto* train = app.add_subcommand("train", "run a mitigation and evaluate");
  auto* analyze = app.add_subcommand("analyze", "run an analysis suite");
  // Let `imblab <command> --config ...` resolve the shared options above.
  for (auto* sub : {synth, uncertainty, train, analyze}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) options.seed_override = seed_value;

  try {
    if (synth->parsed()) return cmd_synth(options);
    if (uncertainty->parsed()) return cmd_uncertainty(options);
    if (train->parsed()) return cmd_train(options);
    if (analyze->parsed()) return cmd_analyze(options);
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: config-error: " << msg << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: runtime-error: " << msg << '\n';
    return 1;
  }
  return 0;
}
