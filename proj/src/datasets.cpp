#include "imblab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "imblab/io_util.hpp"
#include "imblab/rng.hpp"
#include "imblab/samplers.hpp"

namespace imblab {

namespace {

constexpr char kBinMagic[4] = {'I', 'M', 'B', 'D'};
constexpr std::uint64_t kTestStreamTag = 0x7E57;

}  // namespace

void validate_dataset(const Dataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("dataset: empty");
  if (ds.features.rows() != ds.labels.size()) {
    throw std::invalid_argument("dataset: feature/label row mismatch");
  }
  if (ds.num_classes == 0) {
    throw std::invalid_argument("dataset: num_classes is zero");
  }
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    const int y = ds.labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= ds.num_classes) {
      throw std::invalid_argument("dataset: label out of range at row " +
                                  std::to_string(i));
    }
  }
  if (!ds.features.all_finite()) {
    throw std::invalid_argument("dataset: non-finite feature");
  }
}

std::vector<std::size_t> class_counts(const Dataset& ds) {
  std::vector<std::size_t> counts(ds.num_classes, 0);
  for (int y : ds.labels) counts[static_cast<std::size_t>(y)]++;
  return counts;
}

std::vector<std::size_t> long_tail_counts(const LongTailSpec& spec) {
  if (spec.num_classes < 2) {
    throw std::invalid_argument("long tail: need at least 2 classes");
  }
  if (!(spec.imbalance_ratio >= 1.0)) {
    throw std::invalid_argument("long tail: imbalance ratio must be >= 1");
  }
  if (spec.n_bar == 0) throw std::invalid_argument("long tail: n_bar is zero");
  const double tail = static_cast<double>(spec.n_bar) / spec.imbalance_ratio;
  if (tail < 0.5) {
    throw std::invalid_argument(
        "long tail: n_bar/ir rounds to an empty class; raise n_bar or lower ir");
  }
  std::vector<std::size_t> counts(spec.num_classes);
  const double denom = static_cast<double>(spec.num_classes - 1);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const double exact = static_cast<double>(spec.n_bar) /
                         std::pow(spec.imbalance_ratio,
                                  static_cast<double>(c) / denom);
    counts[c] = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(exact)));
  }
  return counts;
}

Dataset subsample_by_counts(const Dataset& base,
                            std::span<const std::size_t> counts,
                            std::uint64_t seed) {
  validate_dataset(base);
  if (counts.size() != base.num_classes) {
    throw std::invalid_argument("subsample: counts/classes mismatch");
  }
  const ClassIndex index = ClassIndex::from_labels(base.labels, base.num_classes);
  Rng rng(seed);
  std::vector<std::size_t> picked;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::vector<std::size_t> pool = index.members[c];
    if (pool.size() < counts[c]) {
      throw std::invalid_argument("subsample: class " + std::to_string(c) +
                                  " has " + std::to_string(pool.size()) +
                                  " examples, need " + std::to_string(counts[c]));
    }
    // Partial Fisher-Yates: the first counts[c] slots become the sample.
    for (std::size_t i = 0; i < counts[c]; ++i) {
      const std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      picked.push_back(pool[i]);
    }
  }
  Dataset out;
  out.num_classes = base.num_classes;
  out.features = Matrix(picked.size(), base.dim());
  out.labels.reserve(picked.size());
  for (std::size_t r = 0; r < picked.size(); ++r) {
    const auto src = base.features.row(picked[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(base.labels[picked[r]]);
  }
  return out;
}

Dataset subsample_long_tail(const Dataset& base, const LongTailSpec& spec,
                            std::uint64_t seed) {
  return subsample_by_counts(base, long_tail_counts(spec), seed);
}

Matrix class_centers(std::size_t num_classes, std::size_t dim, double spacing) {
  if (num_classes == 0) throw std::invalid_argument("centers: no classes");
  if (dim < 1) throw std::invalid_argument("centers: dim must be >= 1");
  Matrix centers(num_classes, dim);
  if (dim == 1) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      centers(c, 0) = spacing * static_cast<double>(c);
    }
  } else if (dim == 2) {
    // Regular polygon: symmetric for any class count.
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                           static_cast<double>(num_classes);
      centers(c, 0) = spacing * std::cos(angle);
      centers(c, 1) = spacing * std::sin(angle);
    }
  } else if (dim >= num_classes) {
    // Scaled standard basis: a regular simplex, all pairwise gaps equal.
    for (std::size_t c = 0; c < num_classes; ++c) centers(c, c) = spacing;
  } else {
    // Axis-aligned grid walk; not symmetric, but deterministic.
    const std::size_t side = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(num_classes),
                           1.0 / static_cast<double>(dim))));
    for (std::size_t c = 0; c < num_classes; ++c) {
      std::size_t rem = c;
      for (std::size_t k = 0; k < dim; ++k) {
        centers(c, k) = spacing * static_cast<double>(rem % side);
        rem /= side;
      }
    }
  }
  return centers;
}

Dataset synth_gaussian_classes(std::size_t num_classes, std::size_t dim,
                               std::span<const std::size_t> per_class_counts,
                               std::span<const double> noise_per_class,
                               double spacing, std::uint64_t seed) {
  if (per_class_counts.size() != num_classes ||
      noise_per_class.size() != num_classes) {
    throw std::invalid_argument("synth: per-class vectors must have |C| entries");
  }
  for (std::size_t n : per_class_counts) {
    if (n == 0) throw std::invalid_argument("synth: zero-count class");
  }
  for (double s : noise_per_class) {
    if (!(s > 0.0)) throw std::invalid_argument("synth: noise must be > 0");
  }
  const Matrix centers = class_centers(num_classes, dim, spacing);
  std::size_t total = 0;
  for (std::size_t n : per_class_counts) total += n;

  Dataset ds;
  ds.num_classes = num_classes;
  ds.features = Matrix(total, dim);
  ds.labels.reserve(total);
  Rng rng(seed);
  std::size_t row = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto center = centers.row(c);
    for (std::size_t i = 0; i < per_class_counts[c]; ++i, ++row) {
      double* out = ds.features.row(row).data();
      for (std::size_t k = 0; k < dim; ++k) {
        out[k] = center[k] + noise_per_class[c] * rng.normal();
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

Dataset synth_semantic(const SemanticSpec& spec, std::uint64_t seed) {
  if (spec.num_easy == 0 || spec.num_hard == 0) {
    throw std::invalid_argument("semantic: need both easy and hard classes");
  }
  if (spec.per_class_count == 0) {
    throw std::invalid_argument("semantic: zero per-class count");
  }
  if (!(spec.hard_noise > spec.easy_noise && spec.easy_noise > 0.0)) {
    throw std::invalid_argument("semantic: need hard_noise > easy_noise > 0");
  }
  const std::size_t num_classes = spec.num_easy + spec.num_hard;
  std::vector<std::size_t> counts(num_classes, spec.per_class_count);
  std::vector<double> noise(num_classes, spec.hard_noise);
  std::fill(noise.begin(), noise.begin() + static_cast<long>(spec.num_easy),
            spec.easy_noise);
  return synth_gaussian_classes(num_classes, spec.dim, counts, noise,
                                spec.class_center_spacing, seed);
}

Dataset balanced_test_set(std::size_t num_classes, std::size_t dim,
                          std::span<const double> noise_per_class,
                          double spacing, std::size_t test_per_class,
                          std::uint64_t seed) {
  if (test_per_class == 0) {
    throw std::invalid_argument("test split: zero per-class count");
  }
  const std::vector<std::size_t> counts(num_classes, test_per_class);
  return synth_gaussian_classes(num_classes, dim, counts, noise_per_class,
                                spacing, derive_seed(seed, kTestStreamTag));
}

void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  validate_dataset(ds);
  std::ostringstream out;
  for (std::size_t k = 0; k < ds.dim(); ++k) out << 'f' << k << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.features.row(i);
    for (double v : row) out << format_double(v) << ',';
    out << ds.labels[i] << '\n';
  }
  write_file_atomic(path, out.str());
}

Dataset load_dataset_csv(const std::filesystem::path& path,
                         std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("dataset csv: empty file " + path.string());
  }
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw std::runtime_error("dataset csv: bad header in " + path.string());
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k] != "f" + std::to_string(k)) {
      throw std::runtime_error("dataset csv: bad header in " + path.string());
    }
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != dim + 1) {
      throw std::runtime_error(path.string() + ": line " +
                               std::to_string(line_no) + ": expected " +
                               std::to_string(dim + 1) + " fields, got " +
                               std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < dim; ++k) {
      values.push_back(parse_double(fields[k], path, line_no));
    }
    const int y = parse_int(fields[dim], path, line_no);
    if (y < 0) {
      throw std::runtime_error(path.string() + ": line " +
                               std::to_string(line_no) + ": negative label");
    }
    labels.push_back(y);
    max_label = std::max(max_label, y);
  }
  if (labels.empty()) {
    throw std::runtime_error("dataset csv: empty dataset in " + path.string());
  }
  Dataset ds;
  ds.features = Matrix(labels.size(), dim, std::move(values));
  ds.labels = std::move(labels);
  ds.num_classes = num_classes.value_or(static_cast<std::size_t>(max_label) + 1);
  validate_dataset(ds);
  return ds;
}

void save_dataset_bin(const Dataset& ds, const std::filesystem::path& path) {
  validate_dataset(ds);
  std::string payload;
  payload.reserve(16 + ds.features.data().size() * 8 + ds.labels.size() * 4);
  payload.append(kBinMagic, 4);
  auto put_u32 = [&](std::uint32_t v) {
    payload.append(reinterpret_cast<const char*>(&v), 4);
  };
  put_u32(static_cast<std::uint32_t>(ds.size()));
  put_u32(static_cast<std::uint32_t>(ds.dim()));
  put_u32(static_cast<std::uint32_t>(ds.num_classes));
  payload.append(reinterpret_cast<const char*>(ds.features.data().data()),
                 ds.features.data().size() * sizeof(double));
  for (int y : ds.labels) {
    const std::int32_t v = y;
    payload.append(reinterpret_cast<const char*>(&v), 4);
  }
  write_file_atomic(path, payload);
}

Dataset load_dataset_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset bin: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kBinMagic, 4) != 0) {
    throw std::runtime_error("dataset bin: bad magic in " + path.string());
  }
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const std::uint32_t n = get_u32();
  const std::uint32_t d = get_u32();
  const std::uint32_t num_classes = get_u32();
  if (!in || n == 0 || d == 0 || num_classes == 0) {
    throw std::runtime_error("dataset bin: bad dimensions in " + path.string());
  }
  Dataset ds;
  ds.num_classes = num_classes;
  ds.features = Matrix(n, d);
  in.read(reinterpret_cast<char*>(ds.features.data().data()),
          static_cast<std::streamsize>(ds.features.data().size() * 8));
  ds.labels.resize(n);
  for (auto& y : ds.labels) {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    y = v;
  }
  if (!in) throw std::runtime_error("dataset bin: truncated file " + path.string());
  validate_dataset(ds);
  return ds;
}

}  // namespace imblab
