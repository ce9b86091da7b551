#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imblab {

enum class MeasureOrigin { Cardinality, Uncertainty, Combined };

std::string to_string(MeasureOrigin origin);
MeasureOrigin measure_origin_from_string(const std::string& s);

// A per-class imbalance score in raw and normalized (sums to 1) form.
struct ImbalanceMeasure {
  MeasureOrigin origin = MeasureOrigin::Cardinality;
  std::vector<double> unnormalized;
  std::vector<double> normalized;

  std::size_t num_classes() const { return normalized.size(); }
};

// Rescales a nonnegative vector to sum to 1. An all-zero input maps to the
// uniform vector; negative entries are rejected.
std::vector<double> normalize(std::span<const double> values);

// Inverse-cardinality measure: raw 1/N_c, normalized across classes.
ImbalanceMeasure cardinality_measure(std::span<const std::size_t> class_counts);

// Rank correlation with average ranks for ties. Returns nullopt when either
// vector is constant (the coefficient is undefined there, and callers need to
// tell that apart from "zero correlation").
std::optional<double> spearman_rho(std::span<const double> x,
                                   std::span<const double> y);

void save_measure_csv(const ImbalanceMeasure& measure,
                      const std::filesystem::path& path);
ImbalanceMeasure load_measure_csv(const std::filesystem::path& path);

}  // namespace imblab
