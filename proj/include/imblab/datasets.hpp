#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "imblab/matrix.hpp"

namespace imblab {

struct Dataset {
  Matrix features;          // N x d
  std::vector<int> labels;  // N entries in [0, num_classes)
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
};

void validate_dataset(const Dataset& ds);
std::vector<std::size_t> class_counts(const Dataset& ds);

// Geometric class-size decay: class c keeps n_bar / ir^(c/(|C|-1)) examples,
// so class 0 has n_bar and the last class has n_bar / ir.
struct LongTailSpec {
  std::size_t n_bar = 0;
  double imbalance_ratio = 1.0;
  std::size_t num_classes = 0;
};

std::vector<std::size_t> long_tail_counts(const LongTailSpec& spec);

// Uniform without-replacement per-class subsample to the given counts.
Dataset subsample_by_counts(const Dataset& base,
                            std::span<const std::size_t> counts,
                            std::uint64_t seed);
Dataset subsample_long_tail(const Dataset& base, const LongTailSpec& spec,
                            std::uint64_t seed);

// Deterministic symmetric class-center layout scaled by `spacing`:
// a line for d=1, a regular polygon for d=2, scaled standard-basis vectors
// when d >= |C|, and an axis-aligned grid otherwise.
Matrix class_centers(std::size_t num_classes, std::size_t dim, double spacing);

// Isotropic Gaussian blob per class at the layout centers; noise_per_class[c]
// is the standard deviation of class c.
Dataset synth_gaussian_classes(std::size_t num_classes, std::size_t dim,
                               std::span<const std::size_t> per_class_counts,
                               std::span<const double> noise_per_class,
                               double spacing, std::uint64_t seed);

// Equal-cardinality classes with two difficulty families: the first num_easy
// classes use easy_noise, the rest hard_noise.
struct SemanticSpec {
  std::size_t num_easy = 0;
  std::size_t num_hard = 0;
  std::size_t per_class_count = 0;
  std::size_t dim = 0;
  double easy_noise = 0.0;
  double hard_noise = 0.0;
  double class_center_spacing = 1.0;
};

Dataset synth_semantic(const SemanticSpec& spec, std::uint64_t seed);

// Balanced heldout set from the same generator geometry, drawn from a seed
// stream derived from (seed, test tag) so it never overlaps training draws.
Dataset balanced_test_set(std::size_t num_classes, std::size_t dim,
                          std::span<const double> noise_per_class,
                          double spacing, std::size_t test_per_class,
                          std::uint64_t seed);

// CSV: header "f0,...,f{d-1},label"; doubles in shortest round-trip form.
// num_classes is inferred as max(label)+1 unless supplied.
void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path,
                         std::optional<std::size_t> num_classes = std::nullopt);

// Binary: magic "IMBD", u32 N/d/|C|, f64 features row-major, i32 labels.
void save_dataset_bin(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset_bin(const std::filesystem::path& path);

}  // namespace imblab
