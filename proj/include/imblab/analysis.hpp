#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "imblab/datasets.hpp"
#include "imblab/ensemble.hpp"
#include "imblab/measures.hpp"
#include "imblab/trainer.hpp"

namespace imblab {

// What an experiment runner produces: named tables of numeric columns.
// A cell can be explicitly undefined (e.g. rank correlation against a
// constant vector), which is preserved through serialization.
struct Cell {
  double value = 0.0;
  bool defined = true;
};

Cell defined_cell(double v);
Cell undefined_cell();

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;  // empty, or one label per row
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> cells);
  void add_row(std::vector<double> values);
};

enum class AnalysisKind {
  MeasureErrorAlignment,  // per-class measure vs naive test error, with rho
  ImbalanceSweep,         // measures as the imbalance ratio grows
  DuplicationSweep,       // measure drift under materialized duplicates
  MitigationCompare,      // method-by-seed top-1 error matrix
};

std::string to_string(AnalysisKind kind);
AnalysisKind analysis_kind_from_string(const std::string& s);

struct AnalysisReport {
  AnalysisKind kind = AnalysisKind::MeasureErrorAlignment;
  std::vector<Table> tables;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;

  const Table& table(const std::string& name) const;
};

// report.json plus one plot-ready CSV per table, all inside `dir`.
void save_report(const AnalysisReport& report, const std::filesystem::path& dir);

// How to build the train/test pair for an experiment.
struct DatasetSpec {
  enum class Kind { LongTail, Semantic, File } kind = Kind::LongTail;

  // LongTail: balanced Gaussian base, one noise level, geometric class decay.
  std::size_t num_classes = 10;
  std::size_t dim = 10;
  std::size_t n_bar = 200;
  double imbalance_ratio = 1.0;
  double noise = 0.5;
  double spacing = 1.0;

  // Semantic: equal counts, two hardness families.
  SemanticSpec semantic;

  // File: pre-generated pair.
  std::filesystem::path train_path;
  std::filesystem::path test_path;
};

Dataset build_train_dataset(const DatasetSpec& spec, std::uint64_t seed);
Dataset build_test_dataset(const DatasetSpec& spec, std::size_t test_per_class,
                           std::uint64_t seed);

// Shared training/ensemble knobs for the runners.
struct ExperimentConfig {
  ModelConfig model;
  OptimConfig optim;
  std::size_t train_epochs = 30;
  std::size_t ensemble_members = 5;
  std::size_t ensemble_epochs = 30;
  std::size_t test_per_class = 200;
  std::size_t jobs = 1;
};

// Trains the no-mitigation ensemble and returns the class uncertainty measure
// computed over the training examples.
ImbalanceMeasure ensemble_uncertainty(const Dataset& train,
                                      const ExperimentConfig& config,
                                      std::uint64_t seed);

// Per-class measures against naive per-class test error, plus rank
// correlations (flagged undefined when a measure is constant).
AnalysisReport run_alignment(const DatasetSpec& spec,
                             const ExperimentConfig& config,
                             std::span<const std::uint64_t> seeds,
                             const std::string& config_hash = "");

// Both measures across an imbalance-ratio list; each ratio is a per-class
// subsample of one balanced base per seed.
AnalysisReport run_ir_sweep(std::span<const double> ir_list,
                            const DatasetSpec& spec,
                            const ExperimentConfig& config,
                            std::span<const std::uint64_t> seeds,
                            const std::string& config_hash = "");

// Expands class c to round(N_c^(1-strength) * N_max^strength) examples by
// cycling its originals: strength 0 is the original set, 1 is exact balance
// at the majority count.
Dataset materialize_duplication(const Dataset& ds, double strength);
std::vector<std::size_t> duplicated_counts(std::span<const std::size_t> counts,
                                           double strength);

// Measure drift (L1 distance from the strength-0 measure) as duplicates grow.
AnalysisReport run_duplication_sweep(std::span<const double> strength_list,
                                     const DatasetSpec& spec,
                                     const ExperimentConfig& config,
                                     std::span<const std::uint64_t> seeds,
                                     const std::string& config_hash = "");

// One named mitigation recipe.
struct Method {
  std::string name;
  std::string group;  // baseline / resampling / reweighting / margin / two-stage
  MitigationSpec mitigation;
  bool needs_uncertainty = false;
};

// The full built-in recipe matrix (baseline + one row per mitigation).
std::vector<Method> standard_methods(std::size_t epochs,
                                     std::size_t stage1_epochs,
                                     std::size_t stage2_epochs);
const Method& find_method(std::span<const Method> methods,
                          const std::string& name);

AnalysisReport run_mitigation_compare(std::span<const Method> methods,
                                      const DatasetSpec& spec,
                                      const ExperimentConfig& config,
                                      std::span<const std::uint64_t> seeds,
                                      const std::string& config_hash = "");

}  // namespace imblab
