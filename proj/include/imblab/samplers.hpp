#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "imblab/rng.hpp"

namespace imblab {

// Per-class sampling probabilities (sums to 1).
struct ClassProbs {
  std::vector<double> alpha;

  std::size_t num_classes() const { return alpha.size(); }
};

// Linear per-epoch interpolation between two sampling distributions.
struct SamplerSchedule {
  ClassProbs start;
  ClassProbs end;
  std::size_t total_epochs = 1;
};

// Throws unless alpha is a probability vector (entries >= 0, sum within 1e-9 of 1).
void validate_probs(const ClassProbs& probs);

// Instance-balanced sampling: alpha_c = N_c / sum N.
ClassProbs random_probs(std::span<const std::size_t> class_counts);

// Class-balanced sampling: uniform 1/|C|.
ClassProbs class_balanced_probs(std::size_t num_classes);

// Progressively-balanced: start at epoch 0, end at epoch == total_epochs.
ClassProbs progressive_probs(std::size_t epoch, const SamplerSchedule& schedule);

// Uncertainty-based resampling: alpha is the normalized uncertainty measure.
ClassProbs uncertainty_probs(std::span<const double> mu_u_normalized);

// Progressive schedule from instance-balanced to uncertainty-based.
ClassProbs progressive_uncertainty_probs(std::size_t epoch, std::size_t total_epochs,
                         std::span<const std::size_t> class_counts,
                         std::span<const double> mu_u_normalized);

// Duplication-strength interpolation: geometric mix of the natural class
// distribution (lambda=0) and the fully oversampled uniform one (lambda=1),
// renormalized.
ClassProbs duplication_probs(double lambda,
                             std::span<const std::size_t> class_counts);

// Example indices grouped by class label.
struct ClassIndex {
  std::vector<std::vector<std::size_t>> members;

  static ClassIndex from_labels(std::span<const int> labels,
                                std::size_t num_classes);
  std::size_t num_classes() const { return members.size(); }
};

// Two-stage draw with replacement: class from alpha, then a uniform member of
// that class. Every class with positive alpha must be non-empty.
std::vector<std::size_t> draw_batch(const ClassProbs& probs,
                                    const ClassIndex& index,
                                    std::size_t batch_size, Rng& rng);

void save_probs_csv(const ClassProbs& probs, const std::filesystem::path& path);
ClassProbs load_probs_csv(const std::filesystem::path& path);

}  // namespace imblab
