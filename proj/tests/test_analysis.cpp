#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "imblab/analysis.hpp"

using namespace imblab;

namespace {

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentConfig fast_config() {
  ExperimentConfig config;
  config.model.hidden_dims = {8};
  config.optim.learning_rate = 0.05;
  config.optim.batch_size = 32;
  config.train_epochs = 4;
  config.ensemble_members = 2;
  config.ensemble_epochs = 3;
  config.test_per_class = 30;
  return config;
}

DatasetSpec small_longtail() {
  DatasetSpec spec;
  spec.kind = DatasetSpec::Kind::LongTail;
  spec.num_classes = 4;
  spec.dim = 3;
  spec.n_bar = 60;
  spec.imbalance_ratio = 6.0;
  spec.noise = 0.5;
  return spec;
}

}  // namespace

TEST_CASE("duplicated counts interpolate between original and balanced") {
  const std::vector<std::size_t> counts{100, 40, 10};
  CHECK(duplicated_counts(counts, 0.0) == counts);
  CHECK(duplicated_counts(counts, 1.0) ==
        std::vector<std::size_t>{100, 100, 100});

  // Geometric growth for the smallest class, never below the original.
  std::size_t prev = 0;
  for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto dup = duplicated_counts(counts, s);
    CHECK(dup[2] >= prev);
    CHECK(dup[0] == 100);
    for (std::size_t c = 0; c < 3; ++c) CHECK(dup[c] >= counts[c]);
    prev = dup[2];
  }
  const auto mid = duplicated_counts(counts, 0.5);
  CHECK(mid[2] == static_cast<std::size_t>(
                      std::llround(std::pow(10.0, 0.5) * std::pow(100.0, 0.5))));
  CHECK_THROWS_AS(duplicated_counts(counts, 1.5), std::invalid_argument);
}

TEST_CASE("materialized duplicates cycle originals deterministically") {
  Dataset ds;
  ds.features = Matrix(4, 1, {10.0, 11.0, 20.0, 21.0});
  ds.labels = {0, 0, 1, 1};
  ds.num_classes = 2;

  const Dataset same = materialize_duplication(ds, 0.0);
  CHECK(same.features == ds.features);
  CHECK(same.labels == ds.labels);

  Dataset skewed;
  skewed.features = Matrix(5, 1, {10.0, 11.0, 12.0, 13.0, 20.0});
  skewed.labels = {0, 0, 0, 0, 1};
  skewed.num_classes = 2;
  const Dataset full = materialize_duplication(skewed, 1.0);
  CHECK(class_counts(full) == std::vector<std::size_t>{4, 4});
  // Class 1 has one original, repeated four times.
  std::size_t copies = 0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full.labels[i] == 1) {
      CHECK(full.features(i, 0) == 20.0);
      ++copies;
    }
  }
  CHECK(copies == 4);

  // Cycling: with two originals and three slots the first appears twice.
  Dataset two;
  two.features = Matrix(5, 1, {1.0, 2.0, 3.0, 30.0, 31.0});
  two.labels = {0, 0, 0, 1, 1};
  two.num_classes = 2;
  const Dataset dup = materialize_duplication(two, 1.0);
  std::vector<double> minority;
  for (std::size_t i = 0; i < dup.size(); ++i) {
    if (dup.labels[i] == 1) minority.push_back(dup.features(i, 0));
  }
  CHECK(minority == std::vector<double>{30.0, 31.0, 30.0});
}

TEST_CASE("report serialization writes one csv per table plus a json summary") {
  AnalysisReport report;
  report.kind = AnalysisKind::MeasureErrorAlignment;
  report.seeds = {1, 2};
  report.config_hash = "cafef00d";
  Table t;
  t.name = "rho";
  t.columns = {"seed", "rho_cardinality", "rho_uncertainty"};
  t.add_row({defined_cell(1.0), undefined_cell(), defined_cell(0.75)});
  report.tables.push_back(t);

  const auto dir = temp_dir("report_out");
  save_report(report, dir);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "rho.csv"));

  std::ifstream in(dir / "rho.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "seed,rho_cardinality,rho_uncertainty");
  CHECK(row == "1,undefined,0.75");

  std::ifstream jin(dir / "report.json");
  const std::string json((std::istreambuf_iterator<char>(jin)),
                         std::istreambuf_iterator<char>());
  CHECK(json.find("\"cafef00d\"") != std::string::npos);
  CHECK(json.find("null") != std::string::npos);  // undefined rho

  CHECK_THROWS_AS(report.table("missing"), std::invalid_argument);
  CHECK(report.table("rho").columns.size() == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("table rows must match the column count") {
  Table t;
  t.name = "x";
  t.columns = {"a", "b"};
  CHECK_THROWS_AS(t.add_row({1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_NOTHROW(t.add_row({1.0, 2.0}));
}

TEST_CASE("analysis kind names round trip") {
  for (AnalysisKind k :
       {AnalysisKind::MeasureErrorAlignment, AnalysisKind::ImbalanceSweep,
        AnalysisKind::DuplicationSweep, AnalysisKind::MitigationCompare}) {
    CHECK(analysis_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(analysis_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("dataset builders are deterministic per seed and kind") {
  const DatasetSpec spec = small_longtail();
  const Dataset a = build_train_dataset(spec, 7);
  const Dataset b = build_train_dataset(spec, 7);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(class_counts(a) == long_tail_counts({60, 6.0, 4}));

  const Dataset c = build_train_dataset(spec, 8);
  CHECK(c.features.data() != a.features.data());

  const Dataset test = build_test_dataset(spec, 25, 7);
  CHECK(class_counts(test) == std::vector<std::size_t>(4, 25));
  CHECK(test.features.data() != a.features.data());

  DatasetSpec balanced = spec;
  balanced.imbalance_ratio = 1.0;
  const Dataset flat = build_train_dataset(balanced, 7);
  CHECK(class_counts(flat) == std::vector<std::size_t>(4, 60));
}

TEST_CASE("semantic dataset spec builds equal counts with two noise tiers") {
  DatasetSpec spec;
  spec.kind = DatasetSpec::Kind::Semantic;
  spec.semantic.num_easy = 2;
  spec.semantic.num_hard = 2;
  spec.semantic.per_class_count = 30;
  spec.semantic.dim = 3;
  spec.semantic.easy_noise = 0.2;
  spec.semantic.hard_noise = 0.8;
  const Dataset ds = build_train_dataset(spec, 3);
  CHECK(ds.num_classes == 4);
  CHECK(class_counts(ds) == std::vector<std::size_t>(4, 30));
  const Dataset test = build_test_dataset(spec, 20, 3);
  CHECK(class_counts(test) == std::vector<std::size_t>(4, 20));
}

TEST_CASE("file dataset spec round trips through csv") {
  const auto dir = temp_dir("file_spec");
  std::filesystem::create_directories(dir);
  DatasetSpec gen = small_longtail();
  const Dataset train = build_train_dataset(gen, 5);
  const Dataset test = build_test_dataset(gen, 10, 5);
  save_dataset_csv(train, dir / "train.csv");
  save_dataset_csv(test, dir / "test.csv");

  DatasetSpec file;
  file.kind = DatasetSpec::Kind::File;
  file.train_path = dir / "train.csv";
  file.test_path = dir / "test.csv";
  const Dataset loaded = build_train_dataset(file, 999);  // seed ignored
  CHECK(loaded.features == train.features);
  const Dataset loaded_test = build_test_dataset(file, 123, 999);
  CHECK(loaded_test.features == test.features);
  std::filesystem::remove_all(dir);
}

TEST_CASE("the standard method registry covers every mitigation family") {
  const std::vector<Method> methods = standard_methods(6, 4, 2);
  CHECK(methods.size() >= 15);
  CHECK(methods.front().name == "naive");
  CHECK(methods.front().group == "baseline");

  std::set<std::string> groups;
  std::set<std::string> names;
  for (const Method& m : methods) {
    groups.insert(m.group);
    CHECK(names.insert(m.name).second);  // unique names
    CHECK(!m.mitigation.stages.empty());
    std::size_t total = 0;
    for (const StageSpec& s : m.mitigation.stages) total += s.epochs;
    CHECK(total == 6);  // every recipe trains the same budget
    if (m.group == "two-stage") {
      CHECK(m.mitigation.stages.size() == 2);
      CHECK(m.mitigation.stages[0].epochs == 4);
      CHECK(m.mitigation.stages[1].epochs == 2);
    }
  }
  CHECK(groups == std::set<std::string>{"baseline", "resampling", "reweighting",
                                        "margin", "two-stage"});

  // Uncertainty-driven methods are flagged so callers know to train ensembles.
  CHECK(find_method(methods, "uncertainty-resample").needs_uncertainty);
  CHECK(find_method(methods, "uncertainty-margin").needs_uncertainty);
  CHECK(!find_method(methods, "class-balanced-resample").needs_uncertainty);
  CHECK_THROWS_AS(find_method(methods, "no-such-method"), std::invalid_argument);
}

TEST_CASE("alignment runner reports per-class rows and rho per seed") {
  const DatasetSpec spec = small_longtail();
  const ExperimentConfig config = fast_config();
  const std::vector<std::uint64_t> seeds{11, 12};
  const AnalysisReport report = run_alignment(spec, config, seeds, "abcd");
  CHECK(report.kind == AnalysisKind::MeasureErrorAlignment);
  CHECK(report.seeds == seeds);

  const Table& per_class = report.table("per_class");
  CHECK(per_class.columns ==
        std::vector<std::string>{"seed", "class_index", "count",
                                 "mu_cardinality", "mu_uncertainty",
                                 "test_error"});
  CHECK(per_class.rows.size() == 2 * 4);  // seeds x classes

  const Table& rho = report.table("rho");
  CHECK(rho.rows.size() == 2);
  for (const auto& row : rho.rows) {
    // Long-tail counts vary, so the cardinality rho is defined here.
    CHECK(row[1].defined);
    if (row[1].defined) {
      CHECK(row[1].value >= -1.0);
      CHECK(row[1].value <= 1.0);
    }
  }
}

TEST_CASE("alignment on a balanced set leaves cardinality rho undefined") {
  DatasetSpec spec = small_longtail();
  spec.imbalance_ratio = 1.0;  // uniform counts -> constant measure
  const std::vector<std::uint64_t> seeds{21};
  const AnalysisReport report = run_alignment(spec, fast_config(), seeds, "");
  const Table& rho = report.table("rho");
  REQUIRE(rho.rows.size() == 1);
  CHECK(!rho.rows[0][1].defined);
}

TEST_CASE("imbalance sweep emits one block per ratio with exact counts") {
  const std::vector<double> ratios{1.0, 4.0};
  DatasetSpec spec = small_longtail();
  const std::vector<std::uint64_t> seeds{31};
  const AnalysisReport report =
      run_ir_sweep(ratios, spec, fast_config(), seeds, "");
  CHECK(report.kind == AnalysisKind::ImbalanceSweep);
  const Table& measures = report.table("measures");
  CHECK(measures.rows.size() == ratios.size() * 4);

  // Rows carry the subsampled per-class counts for each ratio.
  for (const auto& row : measures.rows) {
    const double ratio = row[1].value;
    const std::size_t cls = static_cast<std::size_t>(row[2].value);
    const auto want = long_tail_counts({60, ratio, 4});
    CHECK(row[3].value == static_cast<double>(want[cls]));
  }
}

TEST_CASE("duplication sweep reports zero drift at strength zero") {
  const std::vector<double> strengths{0.0, 1.0};
  DatasetSpec spec = small_longtail();
  const std::vector<std::uint64_t> seeds{41};
  const AnalysisReport report =
      run_duplication_sweep(strengths, spec, fast_config(), seeds, "");
  CHECK(report.kind == AnalysisKind::DuplicationSweep);
  const Table& drift = report.table("drift");
  REQUIRE(drift.rows.size() == 2);
  CHECK(drift.rows[0][1].value == 0.0);  // strength column
  CHECK(drift.rows[0][2].value == 0.0);  // cardinality drift
  CHECK(drift.rows[0][3].value == 0.0);  // uncertainty drift
  // Full duplication flattens counts: cardinality measure drift is positive.
  CHECK(drift.rows[1][2].value > 0.0);
}

TEST_CASE("mitigation compare runs the requested subset with shared seeds") {
  DatasetSpec spec = small_longtail();
  const ExperimentConfig config = fast_config();
  const std::vector<std::uint64_t> seeds{51};
  const std::vector<Method> all = standard_methods(config.train_epochs, 3, 1);
  const std::vector<Method> subset{find_method(all, "naive"),
                                   find_method(all, "class-balanced-resample"),
                                   find_method(all, "uncertainty-reweight")};
  const AnalysisReport report =
      run_mitigation_compare(subset, spec, config, seeds, "");
  CHECK(report.kind == AnalysisKind::MitigationCompare);

  const Table& top1 = report.table("top1");
  REQUIRE(top1.rows.size() == subset.size());
  CHECK(top1.row_labels ==
        std::vector<std::string>{"naive", "class-balanced-resample", "uncertainty-reweight"});
  for (const auto& row : top1.rows) {
    CHECK(row[1].value >= 0.0);
    CHECK(row[1].value <= 100.0);
  }

  const Table& summary = report.table("summary");
  CHECK(summary.rows.size() == subset.size());
  const Table& per_class = report.table("per_class_error");
  CHECK(per_class.rows.size() == subset.size() * 4);
}
