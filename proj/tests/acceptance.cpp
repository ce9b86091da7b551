// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.
// Tolerances and runtime budgets are pinned here on purpose -- editing them
// weakens the gate.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "imblab/analysis.hpp"
#include "imblab/config.hpp"
#include "imblab/ensemble.hpp"
#include "imblab/io_util.hpp"
#include "imblab/losses.hpp"
#include "imblab/measures.hpp"
#include "imblab/samplers.hpp"
#include "imblab/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace imblab;

namespace {

// ---- shared helpers ----

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure(detail);
}

std::string fmt(double v) { return format_double(v); }

std::size_t column_index(const Table& table, const std::string& name) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (table.columns[i] == name) return i;
  }
  throw Failure("table '" + table.name + "' has no column '" + name + "'");
}

double cell_value(const Table& table, std::size_t row, const std::string& col) {
  const Cell& cell = table.rows[row][column_index(table, col)];
  require(cell.defined, "table '" + table.name + "' row " +
                            std::to_string(row) + " column '" + col +
                            "' is undefined");
  return cell.value;
}

std::vector<std::uint64_t> five_seeds() { return {1, 2, 3, 4, 5}; }

Rng& scratch_rng() {
  static Rng rng(0x5EED);
  return rng;
}

std::vector<double> random_logits(std::size_t c) {
  std::vector<double> s(c);
  for (double& v : s) v = 2.0 * scratch_rng().normal();
  return s;
}

// The statistical criteria share one desk-scale training recipe.
ExperimentConfig desk_config() {
  ExperimentConfig config;
  config.model.hidden_dims = {32};
  config.optim.learning_rate = 0.1;
  config.optim.momentum = 0.9;
  config.optim.batch_size = 128;
  config.train_epochs = 30;
  config.ensemble_members = 5;
  config.ensemble_epochs = 20;
  config.test_per_class = 250;
  return config;
}

// ---- criterion bodies ----

// 1: the long-tail count formula reproduces the published size extremes.
void criterion_1() {
  const auto wide = long_tail_counts({5000, 100.0, 10});
  require(wide.front() == 5000, "head count " + std::to_string(wide.front()));
  require(*std::min_element(wide.begin(), wide.end()) == 50,
          "10-class tail expected 50");
  const auto narrow = long_tail_counts({500, 100.0, 100});
  require(narrow.front() == 500, "head count " + std::to_string(narrow.front()));
  require(*std::min_element(narrow.begin(), narrow.end()) == 5,
          "100-class tail expected 5");
}

// 2: every loss matches central finite differences on 100 random instances.
void criterion_2() {
  const std::size_t c = 6;
  const std::vector<std::size_t> counts{170, 90, 55, 30, 18, 9};
  const ImbalanceMeasure mu = cardinality_measure(counts);  // any positive mu

  std::vector<std::pair<std::string, LossSpec>> suite;
  {
    LossSpec spec;
    suite.emplace_back("cross-entropy", spec);
    spec.kind = LossKind::WeightedCE;
    spec.weights = inverse_count_weights(counts);
    suite.emplace_back("weighted cross-entropy", spec);
  }
  for (double gamma : {0.0, 1.0, 2.0}) {
    LossSpec spec;
    spec.kind = LossKind::Focal;
    spec.focal_gamma = gamma;
    suite.emplace_back("focal gamma " + fmt(gamma), spec);
  }
  const std::vector<std::pair<std::string, MarginSpec>> margin_sets{
      {"count margins", count_margins(counts, 0.5)},
      {"logit-adjusted margins", logit_adjusted_margins(counts, 1.0)},
      {"uncertainty margins", uncertainty_margins(mu.unnormalized, 0.5)},
  };
  for (const auto& [margin_name, margins] : margin_sets) {
    for (bool beta : {false, true}) {
      LossSpec spec;
      spec.kind = LossKind::MarginCE;
      spec.margin = margins;
      spec.margin->beta = beta;
      suite.emplace_back(margin_name + (beta ? " beta 1" : " beta 0"), spec);
    }
  }

  for (const auto& [name, spec] : suite) {
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> logits = random_logits(c);
      const int label = static_cast<int>(scratch_rng().uniform_index(c));
      const LossGrad out = eval_loss(logits, label, spec);
      const std::vector<double> fd = oracle::fd_gradient(
          [&](std::span<const double> s) {
            return eval_loss(s, label, spec).loss;
          },
          logits);
      const double err = oracle::max_rel_err(out.grad, fd);
      require(err <= 1e-4,
              name + " instance " + std::to_string(i) + " rel err " + fmt(err));
    }
  }
}

// 3: reduction identities hold to 1e-12 (bitwise where construction allows).
void criterion_3() {
  const std::size_t c = 5;
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> logits = random_logits(c);
    const int label = static_cast<int>(scratch_rng().uniform_index(c));
    const LossGrad ce = ce_loss(logits, label);

    const LossGrad focal0 = focal_loss(logits, label, 0.0);
    require(std::abs(focal0.loss - ce.loss) <= 1e-12, "focal gamma 0 loss");

    const ClassWeights ones{std::vector<double>(c, 1.0)};
    const LossGrad unit = weighted_ce_loss(logits, label, ones);
    require(std::abs(unit.loss - ce.loss) <= 1e-12, "unit-weight loss");

    const MarginSpec zero{std::vector<double>(c, 0.0), false};
    const MarginSpec zero_b{std::vector<double>(c, 0.0), true};
    const MarginSpec constant{std::vector<double>(c, 0.6), true};
    for (const MarginSpec& m : {zero, zero_b, constant}) {
      const LossGrad got = margin_ce_loss(logits, label, m);
      require(std::abs(got.loss - ce.loss) <= 1e-12, "margin identity loss");
      for (std::size_t k = 0; k < c; ++k) {
        require(std::abs(got.grad[k] - ce.grad[k]) <= 1e-12,
                "margin identity grad");
      }
    }
    for (std::size_t k = 0; k < c; ++k) {
      require(std::abs(focal0.grad[k] - ce.grad[k]) <= 1e-12, "focal grad");
      require(std::abs(unit.grad[k] - ce.grad[k]) <= 1e-12, "unit grad");
    }
  }

  const std::vector<std::size_t> counts{340, 120, 77, 18};
  require(duplication_probs(0.0, counts).alpha == random_probs(counts).alpha,
          "duplication endpoint 0");
  require(duplication_probs(1.0, counts).alpha == class_balanced_probs(4).alpha,
          "duplication endpoint 1");

  const ClassWeights wu = uncertainty_weights(normalize(std::vector<double>{4, 3, 2, 1}));
  const ClassWeights wc = inverse_count_weights(counts);
  require(combined_weights(wu, wc, 0.0).w == wc.w, "combined endpoint 0");
  require(combined_weights(wu, wc, 1.0).w == wu.w, "combined endpoint 1");
}

// 4: a million draws per constructor track the target within 0.01.
void criterion_4() {
  const std::vector<std::size_t> counts = long_tail_counts({200, 20.0, 10});
  std::vector<int> labels;
  for (std::size_t cls = 0; cls < counts.size(); ++cls) {
    labels.insert(labels.end(), counts[cls], static_cast<int>(cls));
  }
  const ClassIndex index = ClassIndex::from_labels(labels, 10);

  SamplerSchedule schedule;
  schedule.start = random_probs(counts);
  schedule.end = class_balanced_probs(10);
  schedule.total_epochs = 10;

  std::vector<double> mu(10);
  for (std::size_t i = 0; i < 10; ++i) mu[i] = static_cast<double>(10 - i);
  mu = normalize(mu);

  const std::vector<std::pair<std::string, ClassProbs>> targets{
      {"random", random_probs(counts)},
      {"class-balanced", class_balanced_probs(10)},
      {"progressive midpoint", progressive_probs(5, schedule)},
      {"uncertainty", uncertainty_probs(mu)},
      {"duplication 0.5", duplication_probs(0.5, counts)},
  };

  Rng rng(0xF7E9);
  const std::size_t total_draws = 1000000;
  for (const auto& [name, probs] : targets) {
    std::vector<double> freq(10, 0.0);
    std::size_t done = 0;
    while (done < total_draws) {
      const std::size_t take = std::min<std::size_t>(10000, total_draws - done);
      for (std::size_t i : draw_batch(probs, index, take, rng)) {
        freq[static_cast<std::size_t>(labels[i])] += 1.0;
      }
      done += take;
    }
    for (std::size_t cls = 0; cls < 10; ++cls) {
      const double gap = std::abs(freq[cls] / total_draws - probs.alpha[cls]);
      require(gap <= 0.01, name + " class " + std::to_string(cls) + " gap " +
                               fmt(gap));
    }
  }
}

// 5: entropy values, the decomposition identity, and the margin peak.
void criterion_5() {
  const std::vector<double> uniform10(10, 0.1);
  require(std::abs(predictive_entropy(uniform10) - std::log(10.0)) <= 1e-9,
          "uniform entropy vs ln 10");

  // Random ensembles: rows are softmaxed noise.
  for (int trial = 0; trial < 10; ++trial) {
    EnsemblePredictions ens;
    ens.t_members = 5;
    ens.num_examples = 40;
    ens.num_classes = 10;
    ens.probs.reserve(5 * 40 * 10);
    for (std::size_t r = 0; r < 5 * 40; ++r) {
      const std::vector<double> p = oracle::softmax(random_logits(10));
      ens.probs.insert(ens.probs.end(), p.begin(), p.end());
    }
    const std::vector<double> total = per_example_uncertainty(ens);
    const std::vector<double> mi = epistemic_mi(ens);
    const std::vector<double> ee = aleatoric_ee(ens);
    for (std::size_t i = 0; i < total.size(); ++i) {
      require(std::abs(total[i] - mi[i] - ee[i]) <= 1e-9,
              "decomposition gap " + fmt(total[i] - mi[i] - ee[i]));
    }

    std::vector<int> labels(40);
    for (std::size_t i = 0; i < 40; ++i) {
      labels[i] = static_cast<int>(i % 8);
    }
    const auto [raw, norm] = class_uncertainty(total, labels, 8);
    require(std::abs(neumaier_sum(norm) - 1.0) <= 1e-9,
            "measure sum " + fmt(neumaier_sum(norm)));
  }

  // Margin peak: the largest uncertainty gets exactly tau, at any scale.
  const std::vector<double> mu{0.12, 0.55, 0.31, 0.02};
  const double tau = 0.5;
  const MarginSpec base = uncertainty_margins(mu, tau);
  require(base.deltas[1] == tau, "peak margin must equal tau bitwise");
  std::vector<double> scaled = mu;
  for (double& v : scaled) v *= 4.0;  // power of two: exact rescale
  require(uncertainty_margins(scaled, tau).deltas == base.deltas,
          "margins changed under power-of-two rescale");
  for (double& v : scaled) v *= 3.7 / 4.0;
  const MarginSpec odd = uncertainty_margins(scaled, tau);
  require(odd.deltas[1] == tau, "peak margin after odd rescale");
  for (std::size_t k = 0; k < mu.size(); ++k) {
    require(std::abs(odd.deltas[k] - base.deltas[k]) <= 1e-12,
            "margin drifted under rescale");
  }
}

// 6: growing the imbalance ratio raises the tail-class share of both measures.
void criterion_6() {
  DatasetSpec spec;
  spec.kind = DatasetSpec::Kind::LongTail;
  spec.num_classes = 10;
  spec.dim = 10;
  spec.n_bar = 300;
  spec.noise = 0.9;
  const std::vector<double> ratios{1.0, 2.0, 10.0, 20.0, 50.0};
  const auto seeds = five_seeds();

  // A small, lightly trained ensemble keeps the entropy on scarce classes
  // tied to sample size; a bigger net memorizes the smallest classes and
  // flattens the trend at high ratios.
  ExperimentConfig config = desk_config();
  config.model.hidden_dims = {16};
  config.ensemble_epochs = 12;

  const AnalysisReport report = run_ir_sweep(ratios, spec, config, seeds);
  const Table& measures = report.table("measures");

  // ratio -> (tail mu_c, per-seed tail mu_u)
  std::map<double, double> tail_mu_c;
  std::map<double, std::vector<double>> tail_mu_u;
  for (std::size_t r = 0; r < measures.rows.size(); ++r) {
    if (static_cast<std::size_t>(cell_value(measures, r, "class_index")) != 9) {
      continue;
    }
    const double ratio = cell_value(measures, r, "imbalance_ratio");
    tail_mu_c[ratio] = cell_value(measures, r, "mu_cardinality");
    tail_mu_u[ratio].push_back(cell_value(measures, r, "mu_uncertainty"));
  }
  require(tail_mu_c.size() == ratios.size(), "missing ratios in the table");

  double prev_c = -1.0;
  std::vector<double> medians;
  for (double ratio : ratios) {
    require(tail_mu_c[ratio] > prev_c,
            "tail cardinality share not increasing at ratio " + fmt(ratio));
    prev_c = tail_mu_c[ratio];
    require(tail_mu_u[ratio].size() == seeds.size(), "missing seeds");
    medians.push_back(oracle::median(tail_mu_u[ratio]));
  }
  std::size_t inversions = 0;
  std::string detail;
  for (std::size_t i = 0; i + 1 < medians.size(); ++i) {
    if (medians[i + 1] < medians[i]) {
      ++inversions;
      detail += " " + fmt(medians[i]) + "->" + fmt(medians[i + 1]);
    }
  }
  require(inversions <= 1, "tail uncertainty medians invert " +
                               std::to_string(inversions) + " times:" + detail);
}

// 7: duplicates fool the cardinality measure by its full closed-form drift,
// while the uncertainty measure moves strictly less.
void criterion_7() {
  DatasetSpec spec;
  spec.kind = DatasetSpec::Kind::LongTail;
  spec.num_classes = 10;
  spec.dim = 10;
  spec.n_bar = 150;
  spec.imbalance_ratio = 10.0;
  spec.noise = 0.6;
  const std::vector<double> strengths{0.0, 1.0};
  const auto seeds = five_seeds();

  const AnalysisReport report =
      run_duplication_sweep(strengths, spec, desk_config(), seeds);

  // Closed form: fully duplicated counts are uniform, so the cardinality
  // measure lands on 1/|C| and its L1 drift is sum_c |1/C - mu0_c|.
  const auto counts = long_tail_counts({150, 10.0, 10});
  const ImbalanceMeasure mu0 = cardinality_measure(counts);
  double expected_drift = 0.0;
  for (double v : mu0.normalized) expected_drift += std::abs(0.1 - v);

  const Table& measures = report.table("measures");
  double uniform_value = -1.0;
  for (std::size_t r = 0; r < measures.rows.size(); ++r) {
    if (cell_value(measures, r, "strength") != 1.0) continue;
    const double v = cell_value(measures, r, "mu_cardinality");
    if (uniform_value < 0.0) uniform_value = v;
    require(v == uniform_value, "cardinality measure not exactly uniform");
  }
  require(uniform_value > 0.0, "no strength-1 rows");

  const Table& drift = report.table("drift");
  std::vector<double> mu_u_drift;
  for (std::size_t r = 0; r < drift.rows.size(); ++r) {
    if (cell_value(drift, r, "strength") != 1.0) continue;
    const double dc = cell_value(drift, r, "drift_cardinality");
    require(std::abs(dc - expected_drift) <= 1e-12,
            "cardinality drift " + fmt(dc) + " expected " + fmt(expected_drift));
    mu_u_drift.push_back(cell_value(drift, r, "drift_uncertainty"));
  }
  require(mu_u_drift.size() == seeds.size(), "missing seeds in drift table");
  const double med = oracle::median(mu_u_drift);
  require(med < expected_drift, "uncertainty drift " + fmt(med) +
                                    " not below cardinality drift " +
                                    fmt(expected_drift));
}

// 8: hardness imbalance at equal cardinality is invisible to counts but
// visible to uncertainty, and uncertainty-driven mitigation does not hurt.
void criterion_8() {
  DatasetSpec spec;
  spec.kind = DatasetSpec::Kind::Semantic;
  spec.semantic.num_easy = 2;
  spec.semantic.num_hard = 2;
  spec.semantic.per_class_count = 400;
  spec.semantic.dim = 8;
  spec.semantic.easy_noise = 0.3;
  spec.semantic.hard_noise = 0.9;  // ratio 3 meets the contrast floor
  spec.semantic.class_center_spacing = 1.6;
  const auto seeds = five_seeds();

  // Reweighting and progressive resampling only pay off while the classifier
  // still underfits the high-noise classes, so the comparison runs in that
  // regime: a gentle learning rate and a budget short of full convergence.
  ExperimentConfig config = desk_config();
  config.optim.learning_rate = 0.045;
  config.train_epochs = 20;
  config.test_per_class = 500;

  const AnalysisReport alignment = run_alignment(spec, config, seeds);

  const Table& per_class = alignment.table("per_class");
  const double uniform = cell_value(per_class, 0, "mu_cardinality");
  for (std::size_t r = 0; r < per_class.rows.size(); ++r) {
    require(cell_value(per_class, r, "mu_cardinality") == uniform,
            "cardinality measure differs across equal-count classes");
  }
  require(uniform == 0.25, "four equal classes must each get exactly 0.25");

  const Table& rho = alignment.table("rho");
  std::vector<double> rho_u;
  const std::size_t rho_c_col = column_index(rho, "rho_cardinality");
  for (std::size_t r = 0; r < rho.rows.size(); ++r) {
    require(!rho.rows[r][rho_c_col].defined,
            "cardinality rho should be undefined on a constant measure");
    rho_u.push_back(cell_value(rho, r, "rho_uncertainty"));
  }
  require(rho_u.size() == seeds.size(), "missing rho rows");
  const double rho_median = oracle::median(rho_u);
  require(rho_median >= 0.6,
          "median uncertainty-error correlation " + fmt(rho_median));

  const std::vector<Method> all = standard_methods(config.train_epochs, 14, 6);
  const std::vector<Method> chosen{find_method(all, "naive"),
                                   find_method(all, "progressive-uncertainty-resample"),
                                   find_method(all, "uncertainty-reweight")};
  const AnalysisReport compare =
      run_mitigation_compare(chosen, spec, config, seeds);
  const Table& summary = compare.table("summary");
  std::map<std::string, double> mean_top1;
  for (std::size_t r = 0; r < summary.rows.size(); ++r) {
    mean_top1[summary.row_labels[r]] = cell_value(summary, r, "mean_top1");
  }
  const double naive = mean_top1.at("naive");
  for (const char* name : {"progressive-uncertainty-resample", "uncertainty-reweight"}) {
    require(mean_top1.at(name) <= naive,
            std::string(name) + " mean top-1 " + fmt(mean_top1.at(name)) +
                " above naive " + fmt(naive));
  }
}

// 9: on equal-cardinality data every cardinality-driven mitigation collapses
// to the naive run bitwise.
void criterion_9() {
  const std::vector<std::size_t> counts{120, 120, 120, 120};
  const std::vector<double> noise(4, 0.5);
  const Dataset train = synth_gaussian_classes(4, 6, counts, noise, 1.0, 77);

  ModelConfig model;
  model.hidden_dims = {16};
  OptimConfig optim;
  optim.learning_rate = 0.1;
  optim.batch_size = 64;

  const std::vector<Method> methods = standard_methods(8, 5, 3);
  const std::uint64_t run_seed = derive_seed(9, 13);
  const TrainOutput naive = train_run(
      train, model, optim, find_method(methods, "naive").mitigation, run_seed);

  for (const char* name : {"class-balanced-resample", "progressive-resample", "inverse-count-reweight",
                           "effective-number-reweight"}) {
    const TrainOutput other = train_run(
        train, model, optim, find_method(methods, name).mitigation, run_seed);
    require(other.loss_curve == naive.loss_curve,
            std::string(name) + ": loss curves diverge");
    for (std::size_t l = 0; l < naive.model.weights.size(); ++l) {
      require(other.model.weights[l] == naive.model.weights[l],
              std::string(name) + ": weights diverge at layer " +
                  std::to_string(l));
      require(other.model.biases[l] == naive.model.biases[l],
              std::string(name) + ": biases diverge at layer " +
                  std::to_string(l));
    }
  }
}

// 10: every CLI command is byte-deterministic under identical config+seeds.
void criterion_10() {
  const fs::path base = fs::temp_directory_path() / "imblab_acceptance_cli";
  fs::remove_all(base);
  fs::create_directories(base);

  const auto run_cli = [&](const std::string& args) {
    const std::string cmd = std::string(IMBLAB_CLI_PATH) + " " + args +
                            " > /dev/null 2> " + (base / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    const int code =
        (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    if (code != 0) {
      std::ifstream in(base / "stderr.txt");
      const std::string err((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
      throw Failure("cli exited " + std::to_string(code) + ": " + err);
    }
  };

  const auto write_config = [&](const char* name, const std::string& text) {
    const fs::path path = base / name;
    write_file_atomic(path, text);
    return path;
  };

  const std::string common = R"(
  "seeds": [3, 4],
  "test_per_class": 20,
  "dataset": {
    "kind": "longtail",
    "num_classes": 3,
    "dim": 3,
    "n_bar": 40,
    "imbalance_ratio": 4.0,
    "noise": 0.5
  },
  "model": { "hidden_dims": [8] },
  "optim": { "learning_rate": 0.05, "batch_size": 32 })";

  const std::vector<std::pair<std::string, fs::path>> commands{
      {"synth", write_config("synth.json", "{" + common + "}")},
      {"uncertainty",
       write_config("uncertainty.json",
                    "{" + common + R"(, "ensemble": {"members": 2, "epochs": 2}})")},
      {"train", write_config("train.json",
                             "{" + common +
                                 R"(, "train": {"epochs": 3, "method": "class-balanced-resample"}})")},
      {"analyze",
       write_config("analyze.json",
                    "{" + common +
                        R"(, "train": {"epochs": 2}, "ensemble": {"members": 2, "epochs": 2},
        "analysis": {"kind": "alignment"}})")},
  };

  for (const auto& [cmd, config] : commands) {
    const fs::path a = base / (cmd + "_a");
    const fs::path b = base / (cmd + "_b");
    fs::create_directories(a);
    fs::create_directories(b);
    run_cli(cmd + " --config " + config.string() + " --out " + a.string() +
            " --quiet");
    run_cli(cmd + " --config " + config.string() + " --out " + b.string() +
            " --quiet");

    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(a)) {
      names.push_back(entry.path().filename());
    }
    require(!names.empty(), cmd + " produced no files");
    std::sort(names.begin(), names.end());
    for (const fs::path& name : names) {
      require(fs::exists(b / name), cmd + " rerun lacks " + name.string());
      std::ifstream fa(a / name, std::ios::binary);
      std::ifstream fb(b / name, std::ios::binary);
      const std::string da((std::istreambuf_iterator<char>(fa)),
                           std::istreambuf_iterator<char>());
      const std::string db((std::istreambuf_iterator<char>(fb)),
                           std::istreambuf_iterator<char>());
      require(da == db, cmd + " rerun differs in " + name.string());
    }
  }
  fs::remove_all(base);
}

struct Criterion {
  int number;
  const char* summary;
  double budget_seconds;
  std::function<void()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "long-tail count formula reproduces the size extremes", 1.0,
       criterion_1},
      {2, "all losses match finite-difference gradients (rel err <= 1e-4)",
       10.0, criterion_2},
      {3, "reduction identities hold to 1e-12", 30.0, criterion_3},
      {4, "sampler frequencies track targets within 0.01 over 1e6 draws", 30.0,
       criterion_4},
      {5, "uncertainty math: entropy values, decomposition, margin peak", 30.0,
       criterion_5},
      {6, "tail share of both measures grows with the imbalance ratio", 300.0,
       criterion_6},
      {7, "duplication shifts the cardinality measure far more than "
          "uncertainty", 300.0, criterion_7},
      {8, "hardness imbalance: uncertainty aligns with error and mitigation "
          "does not hurt", 600.0, criterion_8},
      {9, "cardinality mitigations are bitwise no-ops on balanced data", 60.0,
       criterion_9},
      {10, "CLI reruns are byte-identical", 120.0, criterion_10},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      criterion.body();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (error.empty() && elapsed > criterion.budget_seconds) {
      std::ostringstream over;
      over << "exceeded budget (" << elapsed << "s > "
           << criterion.budget_seconds << "s)";
      error = over.str();
    }
    std::ostringstream line;
    line << (error.empty() ? "PASS" : "FAIL") << ": criterion "
         << criterion.number << " -- " << criterion.summary << " ["
         << static_cast<int>(elapsed * 1000.0) << " ms]";
    if (!error.empty()) {
      line << " -- " << error;
      ++failures;
    }
    std::cout << line.str() << std::endl;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
