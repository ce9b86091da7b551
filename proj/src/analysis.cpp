#include "imblab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "imblab/io_util.hpp"
#include "imblab/rng.hpp"
#include "imblab/samplers.hpp"

namespace imblab {

namespace {

constexpr std::uint64_t kTrainDataTag = 10;
constexpr std::uint64_t kSubsampleTag = 11;
constexpr std::uint64_t kEnsembleTag = 12;
constexpr std::uint64_t kRunTag = 13;

Cell rho_cell(const std::optional<double>& rho) {
  return rho ? defined_cell(*rho) : undefined_cell();
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("l1 distance: size mismatch");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

double mean_of(std::span<const double> v) {
  return neumaier_sum(v) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

Cell defined_cell(double v) { return Cell{v, true}; }
Cell undefined_cell() { return Cell{0.0, false}; }

void Table::add_row(std::vector<Cell> cells) {
  if (cells.size() != columns.size()) {
    throw std::invalid_argument("table " + name + ": row has " +
                                std::to_string(cells.size()) + " cells, want " +
                                std::to_string(columns.size()));
  }
  rows.push_back(std::move(cells));
}

void Table::add_row(std::vector<double> values) {
  std::vector<Cell> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(defined_cell(v));
  add_row(std::move(cells));
}

std::string to_string(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::MeasureErrorAlignment: return "alignment";
    case AnalysisKind::ImbalanceSweep: return "ir-sweep";
    case AnalysisKind::DuplicationSweep: return "duplication-sweep";
    case AnalysisKind::MitigationCompare: return "mitigation-compare";
  }
  throw std::logic_error("unknown analysis kind");
}

AnalysisKind analysis_kind_from_string(const std::string& s) {
  if (s == "alignment") return AnalysisKind::MeasureErrorAlignment;
  if (s == "ir-sweep") return AnalysisKind::ImbalanceSweep;
  if (s == "duplication-sweep") return AnalysisKind::DuplicationSweep;
  if (s == "mitigation-compare") return AnalysisKind::MitigationCompare;
  throw std::invalid_argument("unknown analysis kind: " + s);
}

const Table& AnalysisReport::table(const std::string& name) const {
  for (const Table& t : tables) {
    if (t.name == name) return t;
  }
  throw std::invalid_argument("report has no table named " + name);
}

void save_report(const AnalysisReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["kind"] = to_string(report.kind);
  j["config_hash"] = report.config_hash;
  j["seeds"] = report.seeds;
  j["tables"] = nlohmann::ordered_json::array();
  for (const Table& t : report.tables) {
    nlohmann::ordered_json jt;
    jt["name"] = t.name;
    jt["columns"] = t.columns;
    if (!t.row_labels.empty()) jt["row_labels"] = t.row_labels;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      auto jr = nlohmann::ordered_json::array();
      for (const Cell& cell : row) {
        if (cell.defined) {
          jr.push_back(cell.value);
        } else {
          jr.push_back(nullptr);
        }
      }
      rows.push_back(std::move(jr));
    }
    jt["rows"] = std::move(rows);
    j["tables"].push_back(std::move(jt));
  }
  write_file_atomic(dir / "report.json", j.dump(2) + "\n");

  for (const Table& t : report.tables) {
    std::ostringstream out;
    const bool labeled = !t.row_labels.empty();
    if (labeled && t.row_labels.size() != t.rows.size()) {
      throw std::invalid_argument("table " + t.name + ": label/row mismatch");
    }
    if (labeled) out << "label,";
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      out << t.columns[c] << (c + 1 < t.columns.size() ? ',' : '\n');
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (labeled) out << t.row_labels[r] << ',';
      for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
        const Cell& cell = t.rows[r][c];
        out << (cell.defined ? format_double(cell.value) : "undefined");
        out << (c + 1 < t.rows[r].size() ? ',' : '\n');
      }
    }
    write_file_atomic(dir / (t.name + ".csv"), out.str());
  }
}

Dataset build_train_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case DatasetSpec::Kind::LongTail: {
      const std::vector<std::size_t> base_counts(spec.num_classes, spec.n_bar);
      const std::vector<double> noise(spec.num_classes, spec.noise);
      const Dataset base = synth_gaussian_classes(
          spec.num_classes, spec.dim, base_counts, noise, spec.spacing,
          derive_seed(seed, kTrainDataTag));
      if (spec.imbalance_ratio == 1.0) return base;
      LongTailSpec lt;
      lt.n_bar = spec.n_bar;
      lt.imbalance_ratio = spec.imbalance_ratio;
      lt.num_classes = spec.num_classes;
      return subsample_long_tail(base, lt, derive_seed(seed, kSubsampleTag));
    }
    case DatasetSpec::Kind::Semantic:
      return synth_semantic(spec.semantic, derive_seed(seed, kTrainDataTag));
    case DatasetSpec::Kind::File:
      return load_dataset_csv(spec.train_path);
  }
  throw std::logic_error("unknown dataset kind");
}

Dataset build_test_dataset(const DatasetSpec& spec, std::size_t test_per_class,
                           std::uint64_t seed) {
  switch (spec.kind) {
    case DatasetSpec::Kind::LongTail: {
      const std::vector<double> noise(spec.num_classes, spec.noise);
      return balanced_test_set(spec.num_classes, spec.dim, noise, spec.spacing,
                               test_per_class, seed);
    }
    case DatasetSpec::Kind::Semantic: {
      const std::size_t num_classes = spec.semantic.num_easy + spec.semantic.num_hard;
      std::vector<double> noise(num_classes, spec.semantic.hard_noise);
      std::fill(noise.begin(),
                noise.begin() + static_cast<long>(spec.semantic.num_easy),
                spec.semantic.easy_noise);
      return balanced_test_set(num_classes, spec.semantic.dim, noise,
                               spec.semantic.class_center_spacing,
                               test_per_class, seed);
    }
    case DatasetSpec::Kind::File:
      return load_dataset_csv(spec.test_path);
  }
  throw std::logic_error("unknown dataset kind");
}

ImbalanceMeasure ensemble_uncertainty(const Dataset& train,
                                      const ExperimentConfig& config,
                                      std::uint64_t seed) {
  const std::vector<MlpModel> members = train_ensemble(
      train, config.model, config.optim, config.ensemble_epochs,
      config.ensemble_members, derive_seed(seed, kEnsembleTag), config.jobs);
  const EnsemblePredictions preds = predict_ensemble(members, train.features);
  return uncertainty_measure(uncertainty_report(preds, train.labels));
}

AnalysisReport run_alignment(const DatasetSpec& spec,
                             const ExperimentConfig& config,
                             std::span<const std::uint64_t> seeds,
                             const std::string& config_hash) {
  if (seeds.empty()) throw std::invalid_argument("alignment: no seeds");
  AnalysisReport report;
  report.kind = AnalysisKind::MeasureErrorAlignment;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.config_hash = config_hash;

  Table per_class;
  per_class.name = "per_class";
  per_class.columns = {"seed", "class_index", "count",
                       "mu_cardinality", "mu_uncertainty", "test_error"};
  Table rho;
  rho.name = "rho";
  rho.columns = {"seed", "rho_cardinality", "rho_uncertainty"};

  for (std::uint64_t seed : seeds) {
    const Dataset train = build_train_dataset(spec, seed);
    const Dataset test = build_test_dataset(spec, config.test_per_class, seed);
    if (train.num_classes < 2) {
      throw std::invalid_argument(
          "alignment: need at least 2 classes for rank correlation");
    }

    const TrainOutput naive =
        train_run(train, config.model, config.optim,
                  MitigationSpec{{naive_stage(config.train_epochs)}},
                  derive_seed(seed, kRunTag));
    const EvalMetrics metrics = evaluate(naive.model, test);

    const std::vector<std::size_t> counts = class_counts(train);
    const ImbalanceMeasure mu_c = cardinality_measure(counts);
    const ImbalanceMeasure mu_u = ensemble_uncertainty(train, config, seed);

    for (std::size_t c = 0; c < train.num_classes; ++c) {
      per_class.add_row({static_cast<double>(seed), static_cast<double>(c),
                         static_cast<double>(counts[c]), mu_c.normalized[c],
                         mu_u.normalized[c], metrics.per_class_error[c]});
    }
    rho.add_row({defined_cell(static_cast<double>(seed)),
                 rho_cell(spearman_rho(mu_c.normalized, metrics.per_class_error)),
                 rho_cell(spearman_rho(mu_u.normalized, metrics.per_class_error))});
  }
  report.tables.push_back(std::move(per_class));
  report.tables.push_back(std::move(rho));
  return report;
}

AnalysisReport run_ir_sweep(std::span<const double> ir_list,
                            const DatasetSpec& spec,
                            const ExperimentConfig& config,
                            std::span<const std::uint64_t> seeds,
                            const std::string& config_hash) {
  if (ir_list.empty()) throw std::invalid_argument("ir sweep: empty ratio list");
  if (seeds.empty()) throw std::invalid_argument("ir sweep: no seeds");
  if (spec.kind != DatasetSpec::Kind::LongTail) {
    throw std::invalid_argument("ir sweep: needs the long-tail dataset kind");
  }
  AnalysisReport report;
  report.kind = AnalysisKind::ImbalanceSweep;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.config_hash = config_hash;

  Table measures;
  measures.name = "measures";
  measures.columns = {"seed", "imbalance_ratio", "class_index", "count",
                      "mu_cardinality", "mu_uncertainty"};

  for (std::uint64_t seed : seeds) {
    // One balanced base per seed; every ratio subsamples the same pool.
    DatasetSpec balanced = spec;
    balanced.imbalance_ratio = 1.0;
    const Dataset base = build_train_dataset(balanced, seed);

    for (std::size_t r = 0; r < ir_list.size(); ++r) {
      LongTailSpec lt;
      lt.n_bar = spec.n_bar;
      lt.imbalance_ratio = ir_list[r];
      lt.num_classes = spec.num_classes;
      const std::vector<std::size_t> counts = long_tail_counts(lt);
      const Dataset train =
          subsample_by_counts(base, counts, derive_seed(seed, kSubsampleTag + r));

      const ImbalanceMeasure mu_c = cardinality_measure(counts);
      const ImbalanceMeasure mu_u = ensemble_uncertainty(train, config, seed + r);
      for (std::size_t c = 0; c < spec.num_classes; ++c) {
        measures.add_row({static_cast<double>(seed), ir_list[r],
                          static_cast<double>(c), static_cast<double>(counts[c]),
                          mu_c.normalized[c], mu_u.normalized[c]});
      }
    }
  }
  report.tables.push_back(std::move(measures));
  return report;
}

std::vector<std::size_t> duplicated_counts(std::span<const std::size_t> counts,
                                           double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw std::invalid_argument("duplication strength must be in [0,1]");
  }
  if (counts.empty()) throw std::invalid_argument("duplication: no classes");
  std::size_t max_count = 0;
  for (std::size_t n : counts) {
    if (n == 0) throw std::invalid_argument("duplication: empty class");
    max_count = std::max(max_count, n);
  }
  std::vector<std::size_t> out(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (strength == 0.0) {
      out[c] = counts[c];
    } else if (strength == 1.0) {
      out[c] = max_count;
    } else {
      const double target = std::pow(static_cast<double>(counts[c]),
                                     1.0 - strength) *
                            std::pow(static_cast<double>(max_count), strength);
      out[c] = std::max(counts[c], static_cast<std::size_t>(std::llround(target)));
    }
  }
  return out;
}

Dataset materialize_duplication(const Dataset& ds, double strength) {
  validate_dataset(ds);
  const std::vector<std::size_t> counts = class_counts(ds);
  const std::vector<std::size_t> targets = duplicated_counts(counts, strength);
  const ClassIndex index = ClassIndex::from_labels(ds.labels, ds.num_classes);
  std::size_t total = 0;
  for (std::size_t t : targets) total += t;

  Dataset out;
  out.num_classes = ds.num_classes;
  out.features = Matrix(total, ds.dim());
  out.labels.reserve(total);
  std::size_t row = 0;
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    const auto& pool = index.members[c];
    for (std::size_t i = 0; i < targets[c]; ++i, ++row) {
      const std::size_t src = pool[i % pool.size()];  // cycle the originals
      const auto feat = ds.features.row(src);
      std::copy(feat.begin(), feat.end(), out.features.row(row).begin());
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

AnalysisReport run_duplication_sweep(std::span<const double> strength_list,
                                     const DatasetSpec& spec,
                                     const ExperimentConfig& config,
                                     std::span<const std::uint64_t> seeds,
                                     const std::string& config_hash) {
  if (strength_list.empty()) {
    throw std::invalid_argument("duplication sweep: empty strength list");
  }
  if (seeds.empty()) throw std::invalid_argument("duplication sweep: no seeds");
  AnalysisReport report;
  report.kind = AnalysisKind::DuplicationSweep;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.config_hash = config_hash;

  Table measures;
  measures.name = "measures";
  measures.columns = {"seed", "strength", "class_index", "count",
                      "mu_cardinality", "mu_uncertainty"};
  Table drift;
  drift.name = "drift";
  drift.columns = {"seed", "strength", "drift_cardinality", "drift_uncertainty"};

  for (std::uint64_t seed : seeds) {
    const Dataset train = build_train_dataset(spec, seed);
    const std::vector<std::size_t> base_counts = class_counts(train);
    const ImbalanceMeasure ref_c = cardinality_measure(base_counts);
    const ImbalanceMeasure ref_u = ensemble_uncertainty(train, config, seed);

    for (std::size_t s = 0; s < strength_list.size(); ++s) {
      const double strength = strength_list[s];
      ImbalanceMeasure mu_c;
      ImbalanceMeasure mu_u;
      std::vector<std::size_t> counts;
      if (strength == 0.0) {
        mu_c = ref_c;
        mu_u = ref_u;
        counts = base_counts;
      } else {
        const Dataset expanded = materialize_duplication(train, strength);
        counts = class_counts(expanded);
        mu_c = cardinality_measure(counts);
        mu_u = ensemble_uncertainty(expanded, config, seed + s);
      }
      for (std::size_t c = 0; c < train.num_classes; ++c) {
        measures.add_row({static_cast<double>(seed), strength,
                          static_cast<double>(c), static_cast<double>(counts[c]),
                          mu_c.normalized[c], mu_u.normalized[c]});
      }
      drift.add_row({static_cast<double>(seed), strength,
                     l1_distance(mu_c.normalized, ref_c.normalized),
                     l1_distance(mu_u.normalized, ref_u.normalized)});
    }
  }
  report.tables.push_back(std::move(measures));
  report.tables.push_back(std::move(drift));
  return report;
}

std::vector<Method> standard_methods(std::size_t epochs,
                                     std::size_t stage1_epochs,
                                     std::size_t stage2_epochs) {
  std::vector<Method> methods;
  auto one_stage = [&](std::string name, std::string group, SamplerKind sampler,
                       LossConfig loss, bool needs_u) {
    StageSpec stage;
    stage.epochs = epochs;
    stage.sampler.kind = sampler;
    stage.loss = loss;
    methods.push_back(Method{std::move(name), std::move(group),
                             MitigationSpec{{stage}}, needs_u});
  };
  auto two_stage = [&](std::string name, SamplerKind sampler, LossConfig loss,
                       bool needs_u) {
    StageSpec second;
    second.epochs = stage2_epochs;
    second.sampler.kind = sampler;
    second.loss = loss;
    methods.push_back(Method{
        std::move(name), "two-stage",
        MitigationSpec{{naive_stage(stage1_epochs), second}}, needs_u});
  };

  LossConfig ce;

  one_stage("naive", "baseline", SamplerKind::Random, ce, false);

  one_stage("class-balanced-resample", "resampling", SamplerKind::ClassBalanced, ce, false);
  one_stage("progressive-resample", "resampling", SamplerKind::Progressive, ce, false);
  one_stage("uncertainty-resample", "resampling", SamplerKind::Uncertainty, ce,
            true);
  one_stage("progressive-uncertainty-resample", "resampling",
            SamplerKind::ProgressiveUncertainty, ce, true);

  LossConfig inv_count = ce;
  inv_count.kind = LossKind::WeightedCE;
  inv_count.weight_source = WeightSource::Cardinality;
  one_stage("inverse-count-reweight", "reweighting", SamplerKind::Random, inv_count,
            false);

  LossConfig effective = ce;
  effective.kind = LossKind::WeightedCE;
  effective.weight_source = WeightSource::EffectiveNumber;
  one_stage("effective-number-reweight", "reweighting", SamplerKind::Random,
            effective, false);

  LossConfig focal = ce;
  focal.kind = LossKind::Focal;
  one_stage("focal", "reweighting", SamplerKind::Random, focal, false);

  LossConfig cb_focal = focal;
  cb_focal.weight_source = WeightSource::EffectiveNumber;
  one_stage("effective-number-focal", "reweighting", SamplerKind::Random,
            cb_focal, false);

  LossConfig unc_weighted = ce;
  unc_weighted.kind = LossKind::WeightedCE;
  unc_weighted.weight_source = WeightSource::Uncertainty;
  one_stage("uncertainty-reweight", "reweighting", SamplerKind::Random, unc_weighted,
            true);

  LossConfig unc_focal = focal;
  unc_focal.weight_source = WeightSource::Uncertainty;
  one_stage("uncertainty-focal", "reweighting", SamplerKind::Random, unc_focal,
            true);

  LossConfig combined = ce;
  combined.kind = LossKind::WeightedCE;
  combined.weight_source = WeightSource::Combined;
  one_stage("combined-reweight", "reweighting", SamplerKind::Random, combined,
            true);

  LossConfig count_margin = ce;
  count_margin.kind = LossKind::MarginCE;
  count_margin.margin_source = MarginSource::Cardinality;
  one_stage("count-margin", "margin", SamplerKind::Random, count_margin, false);

  LossConfig la = ce;
  la.kind = LossKind::MarginCE;
  la.margin_source = MarginSource::LogitAdjusted;
  one_stage("logit-adjust-margin", "margin", SamplerKind::Random, la, false);

  LossConfig unc_margin = ce;
  unc_margin.kind = LossKind::MarginCE;
  unc_margin.margin_source = MarginSource::Uncertainty;
  one_stage("uncertainty-margin", "margin", SamplerKind::Random, unc_margin, true);

  two_stage("two-stage-class-balanced-resample", SamplerKind::ClassBalanced, ce, false);
  two_stage("two-stage-uncertainty-resample", SamplerKind::Uncertainty, ce, true);
  two_stage("two-stage-inverse-count-reweight", SamplerKind::Random, inv_count, false);
  two_stage("two-stage-uncertainty-reweight", SamplerKind::Random, unc_weighted, true);

  return methods;
}

const Method& find_method(std::span<const Method> methods,
                          const std::string& name) {
  for (const Method& m : methods) {
    if (m.name == name) return m;
  }
  throw std::invalid_argument("unknown method: " + name);
}

AnalysisReport run_mitigation_compare(std::span<const Method> methods,
                                      const DatasetSpec& spec,
                                      const ExperimentConfig& config,
                                      std::span<const std::uint64_t> seeds,
                                      const std::string& config_hash) {
  if (methods.empty()) throw std::invalid_argument("compare: no methods");
  if (seeds.empty()) throw std::invalid_argument("compare: no seeds");
  AnalysisReport report;
  report.kind = AnalysisKind::MitigationCompare;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.config_hash = config_hash;

  const bool any_uncertainty =
      std::any_of(methods.begin(), methods.end(),
                  [](const Method& m) { return m.needs_uncertainty; });

  Table top1;
  top1.name = "top1";
  top1.columns = {"seed", "top1_error"};
  Table per_class;
  per_class.name = "per_class_error";
  per_class.columns = {"seed", "class_index", "error"};
  Table summary;
  summary.name = "summary";
  summary.columns = {"mean_top1", "std_top1"};

  std::vector<std::vector<double>> method_errors(methods.size());
  for (std::uint64_t seed : seeds) {
    const Dataset train = build_train_dataset(spec, seed);
    const Dataset test = build_test_dataset(spec, config.test_per_class, seed);
    ImbalanceMeasure mu_u;
    if (any_uncertainty) mu_u = ensemble_uncertainty(train, config, seed);

    for (std::size_t m = 0; m < methods.size(); ++m) {
      const Method& method = methods[m];
      const TrainOutput out =
          train_run(train, config.model, config.optim, method.mitigation,
                    derive_seed(seed, kRunTag),
                    method.needs_uncertainty ? &mu_u : nullptr);
      const EvalMetrics metrics = evaluate(out.model, test);
      method_errors[m].push_back(metrics.top1_error);

      top1.row_labels.push_back(method.name);
      top1.add_row({static_cast<double>(seed), metrics.top1_error});
      for (std::size_t c = 0; c < test.num_classes; ++c) {
        per_class.row_labels.push_back(method.name);
        per_class.add_row({static_cast<double>(seed), static_cast<double>(c),
                           metrics.per_class_error[c]});
      }
    }
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    summary.row_labels.push_back(methods[m].name);
    summary.add_row({mean_of(method_errors[m]), sample_std(method_errors[m])});
  }
  report.tables.push_back(std::move(top1));
  report.tables.push_back(std::move(per_class));
  report.tables.push_back(std::move(summary));
  return report;
}

}  // namespace imblab
