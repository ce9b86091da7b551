#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "imblab/datasets.hpp"
#include "imblab/measures.hpp"
#include "imblab/trainer.hpp"

namespace imblab {

// Per-member class probabilities for a fixed example set: T x N x |C|.
struct EnsemblePredictions {
  std::size_t t_members = 0;
  std::size_t num_examples = 0;
  std::size_t num_classes = 0;
  std::vector<double> probs;  // member-major, then example, then class

  std::span<const double> member_row(std::size_t t, std::size_t i) const {
    return {probs.data() + (t * num_examples + i) * num_classes, num_classes};
  }
};

void validate_predictions(const EnsemblePredictions& ens);

// T copies of the no-mitigation recipe with seeds base_seed..base_seed+T-1.
// jobs > 1 trains members on that many threads; the result is identical to
// the serial run because members share nothing.
std::vector<MlpModel> train_ensemble(const Dataset& train,
                                     const ModelConfig& model_config,
                                     const OptimConfig& optim,
                                     std::size_t epochs, std::size_t t_members,
                                     std::uint64_t base_seed,
                                     std::size_t jobs = 1);

EnsemblePredictions predict_ensemble(const std::vector<MlpModel>& members,
                                     const Matrix& features);

// Arithmetic mean over members, one row per example.
Matrix mean_prediction(const EnsemblePredictions& ens);

// Natural-log entropy of one probability row; 0 log 0 counts as 0.
double predictive_entropy(std::span<const double> probs);

// Entropy of the ensemble mean, per example.
std::vector<double> per_example_uncertainty(const EnsemblePredictions& ens);

// Class-wise mean of per-example uncertainty (raw), plus its normalized form.
// An all-zero raw vector normalizes to uniform.
std::pair<std::vector<double>, std::vector<double>> class_uncertainty(
    std::span<const double> per_example_u, std::span<const int> labels,
    std::size_t num_classes);

// Mutual information between prediction and member: entropy of the mean minus
// mean member entropy, clamped to >= 0.
std::vector<double> epistemic_mi(const EnsemblePredictions& ens);

// Mean member entropy. predictive = aleatoric + epistemic within 1e-9.
std::vector<double> aleatoric_ee(const EnsemblePredictions& ens);

struct UncertaintyReport {
  std::vector<double> per_example_u;
  std::vector<double> class_unnormalized;
  std::vector<double> class_normalized;
  std::optional<std::vector<double>> epistemic;
  std::optional<std::vector<double>> aleatoric;
};

UncertaintyReport uncertainty_report(const EnsemblePredictions& ens,
                                     std::span<const int> labels,
                                     bool with_decomposition = false);

// Packages the class-level columns as a measure usable by samplers/losses.
ImbalanceMeasure uncertainty_measure(const UncertaintyReport& report);

// Compact binary dump: magic "ENSP", u32 T/N/C, then T*N*C doubles.
void save_predictions_bin(const EnsemblePredictions& ens,
                          const std::filesystem::path& path);
EnsemblePredictions load_predictions_bin(const std::filesystem::path& path);

// CSV dump: member,example_index,class_index,prob.
void save_predictions_csv(const EnsemblePredictions& ens,
                          const std::filesystem::path& path);

// CSV: class_index,mu_tilde,mu.
void save_uncertainty_csv(const UncertaintyReport& report,
                          const std::filesystem::path& path);

}  // namespace imblab
