#include "imblab/samplers.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "imblab/io_util.hpp"
#include "imblab/matrix.hpp"

namespace imblab {

namespace {

constexpr double kProbSumTol = 1e-9;

std::size_t checked_total(std::span<const std::size_t> class_counts) {
  if (class_counts.empty()) {
    throw std::invalid_argument("sampler: no classes");
  }
  std::size_t total = 0;
  for (std::size_t n : class_counts) {
    if (n == 0) throw std::invalid_argument("sampler: empty class");
    total += n;
  }
  return total;
}

}  // namespace

void validate_probs(const ClassProbs& probs) {
  if (probs.alpha.empty()) {
    throw std::invalid_argument("class probs: empty vector");
  }
  for (double a : probs.alpha) {
    if (!(a >= 0.0)) {
      throw std::invalid_argument("class probs: negative or NaN entry");
    }
  }
  const double total = neumaier_sum(probs.alpha);
  if (std::abs(total - 1.0) > kProbSumTol) {
    throw std::invalid_argument("class probs: entries sum to " +
                                format_double(total) + ", expected 1");
  }
}

ClassProbs random_probs(std::span<const std::size_t> class_counts) {
  const double total = static_cast<double>(checked_total(class_counts));
  ClassProbs probs;
  probs.alpha.reserve(class_counts.size());
  for (std::size_t n : class_counts) {
    probs.alpha.push_back(static_cast<double>(n) / total);
  }
  return probs;
}

ClassProbs class_balanced_probs(std::size_t num_classes) {
  if (num_classes == 0) throw std::invalid_argument("sampler: no classes");
  ClassProbs probs;
  probs.alpha.assign(num_classes, 1.0 / static_cast<double>(num_classes));
  return probs;
}

ClassProbs progressive_probs(std::size_t epoch, const SamplerSchedule& schedule) {
  if (schedule.start.alpha.size() != schedule.end.alpha.size()) {
    throw std::invalid_argument("progressive schedule: endpoint size mismatch");
  }
  if (schedule.total_epochs == 0) {
    throw std::invalid_argument("progressive schedule: total_epochs must be >= 1");
  }
  if (epoch > schedule.total_epochs) {
    throw std::invalid_argument("progressive schedule: epoch past end of schedule");
  }
  validate_probs(schedule.start);
  validate_probs(schedule.end);
  const double t = static_cast<double>(epoch) /
                   static_cast<double>(schedule.total_epochs);
  ClassProbs probs;
  probs.alpha.reserve(schedule.start.alpha.size());
  for (std::size_t c = 0; c < schedule.start.alpha.size(); ++c) {
    probs.alpha.push_back(std::lerp(schedule.start.alpha[c],
                                    schedule.end.alpha[c], t));
  }
  // The convex combination already sums to 1 up to rounding; only rescale if
  // rounding actually drifted, so schedule endpoints pass through untouched.
  const double total = neumaier_sum(probs.alpha);
  if (std::abs(total - 1.0) > 1e-12) {
    for (double& a : probs.alpha) a /= total;
  }
  return probs;
}

ClassProbs uncertainty_probs(std::span<const double> mu_u_normalized) {
  ClassProbs probs;
  probs.alpha.assign(mu_u_normalized.begin(), mu_u_normalized.end());
  validate_probs(probs);
  return probs;
}

ClassProbs progressive_uncertainty_probs(std::size_t epoch, std::size_t total_epochs,
                         std::span<const std::size_t> class_counts,
                         std::span<const double> mu_u_normalized) {
  if (class_counts.size() != mu_u_normalized.size()) {
    throw std::invalid_argument("progressive uncertainty sampler: counts and measure size mismatch");
  }
  SamplerSchedule schedule;
  schedule.start = random_probs(class_counts);
  schedule.end = uncertainty_probs(mu_u_normalized);
  schedule.total_epochs = total_epochs;
  return progressive_probs(epoch, schedule);
}

ClassProbs duplication_probs(double lambda,
                             std::span<const std::size_t> class_counts) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("duplication strength must be in [0,1]");
  }
  if (lambda == 0.0) return random_probs(class_counts);
  if (lambda == 1.0) return class_balanced_probs(class_counts.size());
  const ClassProbs natural = random_probs(class_counts);
  const double uniform = 1.0 / static_cast<double>(class_counts.size());
  ClassProbs probs;
  probs.alpha.reserve(class_counts.size());
  for (double a : natural.alpha) {
    probs.alpha.push_back(std::pow(uniform, lambda) *
                          std::pow(a, 1.0 - lambda));
  }
  const double total = neumaier_sum(probs.alpha);
  for (double& a : probs.alpha) a /= total;
  return probs;
}

ClassIndex ClassIndex::from_labels(std::span<const int> labels,
                                   std::size_t num_classes) {
  if (num_classes == 0) throw std::invalid_argument("class index: no classes");
  ClassIndex index;
  index.members.resize(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw std::invalid_argument("class index: label " + std::to_string(y) +
                                  " out of range at example " +
                                  std::to_string(i));
    }
    index.members[static_cast<std::size_t>(y)].push_back(i);
  }
  return index;
}

std::vector<std::size_t> draw_batch(const ClassProbs& probs,
                                    const ClassIndex& index,
                                    std::size_t batch_size, Rng& rng) {
  validate_probs(probs);
  if (probs.alpha.size() != index.members.size()) {
    throw std::invalid_argument("draw batch: probs and index size mismatch");
  }
  for (std::size_t c = 0; c < probs.alpha.size(); ++c) {
    if (probs.alpha[c] > 0.0 && index.members[c].empty()) {
      throw std::invalid_argument("draw batch: class " + std::to_string(c) +
                                  " has positive probability but no examples");
    }
  }
  std::vector<std::size_t> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t cls = probs.alpha.size() - 1;  // absorb rounding in the tail
    for (std::size_t c = 0; c < probs.alpha.size(); ++c) {
      cum += probs.alpha[c];
      if (u < cum) {
        cls = c;
        break;
      }
    }
    while (index.members[cls].empty()) --cls;  // rounding fallback guard
    const auto& pool = index.members[cls];
    batch.push_back(pool[rng.uniform_index(pool.size())]);
  }
  return batch;
}

void save_probs_csv(const ClassProbs& probs, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "class_index,alpha\n";
  for (std::size_t c = 0; c < probs.alpha.size(); ++c) {
    out << c << ',' << format_double(probs.alpha[c]) << '\n';
  }
  write_file_atomic(path, out.str());
}

ClassProbs load_probs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("probs csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "class_index,alpha") {
    throw std::runtime_error("probs csv: bad header in " + path.string());
  }
  ClassProbs probs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) {
      throw std::runtime_error("probs csv: line " + std::to_string(line_no) +
                               ": expected 2 fields");
    }
    if (parse_size(fields[0], path, line_no) != probs.alpha.size()) {
      throw std::runtime_error("probs csv: line " + std::to_string(line_no) +
                               ": class indices must be 0,1,2,...");
    }
    probs.alpha.push_back(parse_double(fields[1], path, line_no));
  }
  validate_probs(probs);
  return probs;
}

}  // namespace imblab
