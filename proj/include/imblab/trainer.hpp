#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imblab/datasets.hpp"
#include "imblab/losses.hpp"
#include "imblab/measures.hpp"
#include "imblab/mlp.hpp"

namespace imblab {

enum class SamplerKind {
  Random,                  // instance-balanced (the no-mitigation default)
  ClassBalanced,           // uniform over classes
  Progressive,             // random -> class-balanced over the stage
  Uncertainty,             // alpha = normalized class uncertainty
  ProgressiveUncertainty,  // random -> uncertainty over the stage
  Duplication,             // geometric mix controlled by lambda
};

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Random;
  double lambda = 0.0;  // Duplication only
};

enum class WeightSource { None, Cardinality, EffectiveNumber, Uncertainty, Combined };
enum class MarginSource { None, Cardinality, LogitAdjusted, Uncertainty };

// Which loss to train with and where its weights/margins come from.
struct LossConfig {
  LossKind kind = LossKind::CrossEntropy;
  WeightSource weight_source = WeightSource::None;
  MarginSource margin_source = MarginSource::None;
  double focal_gamma = 2.0;
  double effective_beta = 0.9999;
  double combine_mix = 0.5;   // Combined: mix*uncertainty + (1-mix)*cardinality
  double margin_tau = 0.5;    // cardinality / uncertainty margin scale
  double margin_kappa = 1.0;  // logit-adjusted margin scale
};

struct StageSpec {
  std::size_t epochs = 0;
  SamplerSpec sampler;
  LossConfig loss;
};

struct MitigationSpec {
  std::vector<StageSpec> stages;
};

StageSpec naive_stage(std::size_t epochs);

struct OptimConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch_size = 128;
  std::vector<std::size_t> lr_decay_epochs;  // global epoch indices
  double lr_decay_factor = 0.1;
};

struct ModelConfig {
  std::vector<std::size_t> hidden_dims{32};
};

// Captures what the training loop actually applied, so tests can assert that
// e.g. the naive path never touched weights or margins.
struct TrainProbe {
  bool weights_applied = false;
  bool margins_applied = false;
  std::size_t alpha_refreshes = 0;  // per-epoch schedule recomputations
  std::vector<double> last_weights;
  std::vector<double> last_margins;
  std::vector<double> last_alpha;
};

struct TrainOutput {
  MlpModel model;
  std::vector<double> loss_curve;  // per-epoch mean batch loss
  std::size_t epochs_run = 0;
};

struct EvalMetrics {
  double top1_error = 0.0;               // percent
  std::vector<double> per_class_error;   // percent per class
};

struct RunResult {
  double top1_error = 0.0;
  std::vector<double> per_class_error;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  std::vector<double> loss_curve;
  std::string config_hash;
};

// Materializes the weight/margin sources into a concrete LossSpec. Uncertainty
// and Combined sources require `uncertainty` (origin must be uncertainty).
LossSpec build_loss_spec(const LossConfig& config,
                         std::span<const std::size_t> counts,
                         const ImbalanceMeasure* uncertainty);

TrainOutput train_one_stage(const Dataset& train, const ModelConfig& model_config,
                            const OptimConfig& optim, const StageSpec& stage,
                            std::uint64_t seed,
                            const ImbalanceMeasure* uncertainty = nullptr,
                            TrainProbe* probe = nullptr);

// Runs the stages in order on one model; optimizer velocity is reset at every
// stage boundary while parameters carry over.
TrainOutput train_run(const Dataset& train, const ModelConfig& model_config,
                      const OptimConfig& optim, const MitigationSpec& mitigation,
                      std::uint64_t seed,
                      const ImbalanceMeasure* uncertainty = nullptr,
                      TrainProbe* probe = nullptr);

// Stage 1 is always the naive recipe; stage 2 applies the mitigation.
TrainOutput train_two_stage(const Dataset& train, const ModelConfig& model_config,
                            const OptimConfig& optim, std::size_t stage1_epochs,
                            std::size_t stage2_epochs, const StageSpec& stage2,
                            std::uint64_t seed,
                            const ImbalanceMeasure* uncertainty = nullptr,
                            TrainProbe* probe = nullptr);

// Plain argmax over raw logits; margins and weights play no role here.
EvalMetrics evaluate(const MlpModel& model, const Dataset& test);

RunResult make_run_result(const EvalMetrics& metrics, const TrainOutput& out,
                          std::uint64_t seed, const std::string& config_hash);

std::string run_result_to_json(const RunResult& result);
void save_run_result(const RunResult& result, const std::filesystem::path& path);

}  // namespace imblab
