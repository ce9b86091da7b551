#include "imblab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "imblab/io_util.hpp"
#include "imblab/samplers.hpp"

namespace imblab {

namespace {

constexpr std::uint64_t kInitStreamTag = 1;
constexpr std::uint64_t kBatchStreamTag = 2;

const ImbalanceMeasure* require_uncertainty(const ImbalanceMeasure* measure,
                                            std::size_t num_classes,
                                            const char* what) {
  if (measure == nullptr) {
    throw std::invalid_argument(std::string(what) +
                                ": uncertainty measure required but not provided");
  }
  if (measure->origin != MeasureOrigin::Uncertainty) {
    throw std::invalid_argument(std::string(what) +
                                ": measure origin must be uncertainty");
  }
  if (measure->num_classes() != num_classes) {
    throw std::invalid_argument(std::string(what) +
                                ": measure has wrong class count");
  }
  return measure;
}

// Sampling distribution for the given epoch of a stage. The progressive kinds
// change with the epoch; the rest are constant across the stage.
ClassProbs stage_alpha(const SamplerSpec& sampler, std::size_t epoch,
                       std::size_t stage_epochs,
                       std::span<const std::size_t> counts,
                       const ImbalanceMeasure* uncertainty) {
  switch (sampler.kind) {
    case SamplerKind::Random:
      return random_probs(counts);
    case SamplerKind::ClassBalanced:
      return class_balanced_probs(counts.size());
    case SamplerKind::Progressive: {
      SamplerSchedule schedule;
      schedule.start = random_probs(counts);
      schedule.end = class_balanced_probs(counts.size());
      schedule.total_epochs = stage_epochs;
      return progressive_probs(epoch, schedule);
    }
    case SamplerKind::Uncertainty:
      return uncertainty_probs(
          require_uncertainty(uncertainty, counts.size(), "uncertainty sampler")
              ->normalized);
    case SamplerKind::ProgressiveUncertainty:
      return progressive_uncertainty_probs(
          epoch, stage_epochs, counts,
          require_uncertainty(uncertainty, counts.size(), "progressive uncertainty sampler")
              ->normalized);
    case SamplerKind::Duplication:
      return duplication_probs(sampler.lambda, counts);
  }
  throw std::logic_error("unknown sampler kind");
}

bool is_progressive(SamplerKind kind) {
  return kind == SamplerKind::Progressive ||
         kind == SamplerKind::ProgressiveUncertainty;
}

double lr_at_epoch(const OptimConfig& optim, std::size_t global_epoch) {
  double lr = optim.learning_rate;
  for (std::size_t decay_epoch : optim.lr_decay_epochs) {
    if (global_epoch >= decay_epoch) lr *= optim.lr_decay_factor;
  }
  return lr;
}

std::vector<std::size_t> model_dims(const ModelConfig& config,
                                    std::size_t input_dim,
                                    std::size_t num_classes) {
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(num_classes);
  return dims;
}

// One stage on an existing model. Velocity starts at zero (fresh SgdState).
void run_stage(MlpModel& model, const Dataset& train, const OptimConfig& optim,
               const StageSpec& stage, std::size_t global_epoch_base,
               Rng& batch_rng, const ImbalanceMeasure* uncertainty,
               TrainProbe* probe, std::vector<double>& loss_curve) {
  const std::vector<std::size_t> counts = class_counts(train);
  const ClassIndex index = ClassIndex::from_labels(train.labels, train.num_classes);
  const LossSpec loss_spec = build_loss_spec(stage.loss, counts, uncertainty);
  if (probe != nullptr) {
    if (loss_spec.weights) {
      probe->weights_applied = true;
      probe->last_weights = loss_spec.weights->w;
    }
    if (loss_spec.margin) {
      probe->margins_applied = true;
      probe->last_margins = loss_spec.margin->deltas;
    }
  }

  SgdState state = make_sgd_state(model, optim.learning_rate, optim.momentum,
                                  optim.weight_decay);
  const std::size_t batches_per_epoch =
      (train.size() + optim.batch_size - 1) / optim.batch_size;

  ClassProbs alpha = stage_alpha(stage.sampler, 0, stage.epochs, counts,
                                 uncertainty);
  for (std::size_t epoch = 0; epoch < stage.epochs; ++epoch) {
    if (epoch > 0 && is_progressive(stage.sampler.kind)) {
      alpha = stage_alpha(stage.sampler, epoch, stage.epochs, counts,
                          uncertainty);
      if (probe != nullptr) probe->alpha_refreshes++;
    }
    if (probe != nullptr) probe->last_alpha = alpha.alpha;
    state.learning_rate = lr_at_epoch(optim, global_epoch_base + epoch);

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::vector<std::size_t> picked =
          draw_batch(alpha, index, optim.batch_size, batch_rng);
      Matrix batch(picked.size(), train.dim());
      std::vector<int> labels(picked.size());
      for (std::size_t i = 0; i < picked.size(); ++i) {
        const auto src = train.features.row(picked[i]);
        std::copy(src.begin(), src.end(), batch.row(i).begin());
        labels[i] = train.labels[picked[i]];
      }
      const double batch_loss =
          backward_and_step(model, state, batch, labels, loss_spec);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error(
            "training diverged: non-finite loss at epoch " +
            std::to_string(global_epoch_base + epoch) + ", batch " +
            std::to_string(b));
      }
      epoch_loss += batch_loss;
    }
    loss_curve.push_back(epoch_loss / static_cast<double>(batches_per_epoch));
  }
}

}  // namespace

StageSpec naive_stage(std::size_t epochs) {
  StageSpec stage;
  stage.epochs = epochs;
  stage.sampler.kind = SamplerKind::Random;
  stage.loss.kind = LossKind::CrossEntropy;
  return stage;
}

LossSpec build_loss_spec(const LossConfig& config,
                         std::span<const std::size_t> counts,
                         const ImbalanceMeasure* uncertainty) {
  LossSpec spec;
  spec.kind = config.kind;
  spec.focal_gamma = config.focal_gamma;

  switch (config.weight_source) {
    case WeightSource::None:
      break;
    case WeightSource::Cardinality:
      spec.weights = inverse_count_weights(counts);
      break;
    case WeightSource::EffectiveNumber:
      spec.weights = class_balanced_weights(counts, config.effective_beta);
      break;
    case WeightSource::Uncertainty:
      spec.weights = uncertainty_weights(
          require_uncertainty(uncertainty, counts.size(), "uncertainty weights")
              ->normalized);
      break;
    case WeightSource::Combined: {
      const auto* measure = require_uncertainty(uncertainty, counts.size(),
                                                "combined weights");
      spec.weights = combined_weights(uncertainty_weights(measure->normalized),
                                      inverse_count_weights(counts), config.combine_mix);
      break;
    }
  }

  switch (config.margin_source) {
    case MarginSource::None:
      break;
    case MarginSource::Cardinality:
      spec.margin = count_margins(counts, config.margin_tau);
      break;
    case MarginSource::LogitAdjusted:
      spec.margin = logit_adjusted_margins(counts, config.margin_kappa);
      break;
    case MarginSource::Uncertainty:
      spec.margin = uncertainty_margins(
          require_uncertainty(uncertainty, counts.size(), "uncertainty margins")
              ->unnormalized,
          config.margin_tau);
      break;
  }

  if (spec.kind == LossKind::WeightedCE && !spec.weights) {
    throw std::invalid_argument("weighted loss needs a weight source");
  }
  if (spec.kind == LossKind::MarginCE && !spec.margin) {
    throw std::invalid_argument("margin loss needs a margin source");
  }
  if (spec.kind == LossKind::CrossEntropy && spec.weights) {
    throw std::invalid_argument("plain cross-entropy ignores weights; "
                                "use the weighted loss kind");
  }
  if (spec.kind != LossKind::MarginCE && spec.margin) {
    throw std::invalid_argument("margins configured for a margin-free loss");
  }
  return spec;
}

TrainOutput train_one_stage(const Dataset& train, const ModelConfig& model_config,
                            const OptimConfig& optim, const StageSpec& stage,
                            std::uint64_t seed,
                            const ImbalanceMeasure* uncertainty,
                            TrainProbe* probe) {
  MitigationSpec mitigation;
  mitigation.stages.push_back(stage);
  return train_run(train, model_config, optim, mitigation, seed, uncertainty,
                   probe);
}

TrainOutput train_run(const Dataset& train, const ModelConfig& model_config,
                      const OptimConfig& optim, const MitigationSpec& mitigation,
                      std::uint64_t seed, const ImbalanceMeasure* uncertainty,
                      TrainProbe* probe) {
  validate_dataset(train);
  if (mitigation.stages.empty()) {
    throw std::invalid_argument("mitigation needs at least one stage");
  }
  if (optim.batch_size == 0) {
    throw std::invalid_argument("batch size must be >= 1");
  }

  TrainOutput out;
  out.model = init_model(model_dims(model_config, train.dim(), train.num_classes),
                         derive_seed(seed, kInitStreamTag));
  Rng batch_rng(derive_seed(seed, kBatchStreamTag));
  std::size_t global_epoch = 0;
  for (const StageSpec& stage : mitigation.stages) {
    run_stage(out.model, train, optim, stage, global_epoch, batch_rng,
              uncertainty, probe, out.loss_curve);
    global_epoch += stage.epochs;
  }
  out.epochs_run = global_epoch;
  return out;
}

TrainOutput train_two_stage(const Dataset& train, const ModelConfig& model_config,
                            const OptimConfig& optim, std::size_t stage1_epochs,
                            std::size_t stage2_epochs, const StageSpec& stage2,
                            std::uint64_t seed,
                            const ImbalanceMeasure* uncertainty,
                            TrainProbe* probe) {
  MitigationSpec mitigation;
  mitigation.stages.push_back(naive_stage(stage1_epochs));
  StageSpec second = stage2;
  second.epochs = stage2_epochs;
  mitigation.stages.push_back(second);
  return train_run(train, model_config, optim, mitigation, seed, uncertainty,
                   probe);
}

EvalMetrics evaluate(const MlpModel& model, const Dataset& test) {
  validate_dataset(test);
  const std::vector<std::size_t> counts = class_counts(test);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("evaluate: class " + std::to_string(c) +
                                  " missing from test set");
    }
  }
  const Matrix logits = forward(model, test.features);
  std::vector<std::size_t> wrong(test.num_classes, 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    if (best != static_cast<std::size_t>(test.labels[i])) {
      wrong[static_cast<std::size_t>(test.labels[i])]++;
    }
  }
  EvalMetrics metrics;
  std::size_t wrong_total = 0;
  metrics.per_class_error.reserve(test.num_classes);
  for (std::size_t c = 0; c < test.num_classes; ++c) {
    wrong_total += wrong[c];
    metrics.per_class_error.push_back(100.0 * static_cast<double>(wrong[c]) /
                                      static_cast<double>(counts[c]));
  }
  metrics.top1_error = 100.0 * static_cast<double>(wrong_total) /
                       static_cast<double>(test.size());
  return metrics;
}

RunResult make_run_result(const EvalMetrics& metrics, const TrainOutput& out,
                          std::uint64_t seed, const std::string& config_hash) {
  RunResult result;
  result.top1_error = metrics.top1_error;
  result.per_class_error = metrics.per_class_error;
  result.seed = seed;
  result.epochs_run = out.epochs_run;
  result.loss_curve = out.loss_curve;
  result.config_hash = config_hash;
  return result;
}

std::string run_result_to_json(const RunResult& result) {
  nlohmann::ordered_json j;
  j["seed"] = result.seed;
  j["config_hash"] = result.config_hash;
  j["epochs_run"] = result.epochs_run;
  j["top1_error"] = result.top1_error;
  j["per_class_error"] = result.per_class_error;
  j["loss_curve"] = result.loss_curve;
  return j.dump(2) + "\n";
}

void save_run_result(const RunResult& result, const std::filesystem::path& path) {
  write_file_atomic(path, run_result_to_json(result));
}

}  // namespace imblab
