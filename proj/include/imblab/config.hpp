#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imblab/analysis.hpp"

namespace imblab {

// Parsed experiment config file. The schema is strict: unknown keys anywhere
// are an error, so typos fail before a long run starts.
struct CliConfig {
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> output;
  std::size_t test_per_class = 200;
  std::size_t jobs = 1;

  bool has_dataset = false;
  DatasetSpec dataset;

  bool has_model = false;
  ModelConfig model;

  bool has_optim = false;
  OptimConfig optim;

  struct TrainSection {
    std::size_t epochs = 30;
    std::string method = "naive";
    std::size_t stage1_epochs = 20;
    std::size_t stage2_epochs = 10;
    std::optional<std::filesystem::path> measure_file;
  };
  bool has_train = false;
  TrainSection train;

  struct EnsembleSection {
    std::size_t members = 5;
    std::size_t epochs = 30;
  };
  bool has_ensemble = false;
  EnsembleSection ensemble;

  struct AnalysisSection {
    AnalysisKind kind = AnalysisKind::MeasureErrorAlignment;
    std::vector<double> ir_list{1.0, 2.0, 10.0, 20.0, 50.0};
    std::vector<double> strength_list{0.0, 0.3, 0.5, 0.7, 1.0};
    std::vector<std::string> methods;  // empty: the full built-in matrix
  };
  bool has_analysis = false;
  AnalysisSection analysis;

  // Fingerprint of the raw config text, stamped into every output.
  std::string hash;
};

CliConfig load_config(const std::filesystem::path& path);
CliConfig parse_config(const std::string& text, const std::string& origin);

// Assembles the runner knobs from the parsed sections.
ExperimentConfig experiment_config(const CliConfig& config);

}  // namespace imblab
