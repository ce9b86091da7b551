#include "imblab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "imblab/io_util.hpp"
#include "imblab/matrix.hpp"

namespace imblab {

std::string to_string(MeasureOrigin origin) {
  switch (origin) {
    case MeasureOrigin::Cardinality: return "cardinality";
    case MeasureOrigin::Uncertainty: return "uncertainty";
    case MeasureOrigin::Combined: return "combined";
  }
  throw std::logic_error("unknown measure origin");
}

MeasureOrigin measure_origin_from_string(const std::string& s) {
  if (s == "cardinality") return MeasureOrigin::Cardinality;
  if (s == "uncertainty") return MeasureOrigin::Uncertainty;
  if (s == "combined") return MeasureOrigin::Combined;
  throw std::invalid_argument("unknown measure origin: " + s);
}

std::vector<double> normalize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("normalize: empty vector");
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("normalize: negative entry");
  }
  const double total = neumaier_sum(values);
  if (total == 0.0) {
    return std::vector<double>(values.size(), 1.0 / static_cast<double>(values.size()));
  }
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v /= total;
  return out;
}

ImbalanceMeasure cardinality_measure(std::span<const std::size_t> class_counts) {
  if (class_counts.empty()) {
    throw std::invalid_argument("cardinality measure: no classes");
  }
  ImbalanceMeasure m;
  m.origin = MeasureOrigin::Cardinality;
  m.unnormalized.reserve(class_counts.size());
  for (std::size_t n : class_counts) {
    if (n == 0) throw std::invalid_argument("cardinality measure: empty class");
    m.unnormalized.push_back(1.0 / static_cast<double>(n));
  }
  m.normalized = normalize(m.unnormalized);
  return m;
}

namespace {

// Ranks 1..n with ties sharing the average of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman_rho(std::span<const double> x,
                                   std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  if (x.size() < 2) throw std::invalid_argument("spearman: need >= 2 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("spearman: non-finite value");
    }
  }
  const bool x_const = std::all_of(x.begin(), x.end(),
                                   [&](double v) { return v == x[0]; });
  const bool y_const = std::all_of(y.begin(), y.end(),
                                   [&](double v) { return v == y[0]; });
  if (x_const || y_const) return std::nullopt;

  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;  // ranks always average to this
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // all-tied ranks
  return sxy / std::sqrt(sxx * syy);
}

void save_measure_csv(const ImbalanceMeasure& measure,
                      const std::filesystem::path& path) {
  if (measure.unnormalized.size() != measure.normalized.size()) {
    throw std::invalid_argument("measure csv: raw/normalized size mismatch");
  }
  std::ostringstream out;
  out << "class_index,unnormalized,normalized,origin\n";
  for (std::size_t c = 0; c < measure.normalized.size(); ++c) {
    out << c << ',' << format_double(measure.unnormalized[c]) << ','
        << format_double(measure.normalized[c]) << ','
        << to_string(measure.origin) << '\n';
  }
  write_file_atomic(path, out.str());
}

ImbalanceMeasure load_measure_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("measure csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "class_index,unnormalized,normalized,origin") {
    throw std::runtime_error("measure csv: bad header in " + path.string());
  }
  ImbalanceMeasure m;
  std::size_t line_no = 1;
  bool origin_set = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw std::runtime_error("measure csv: line " + std::to_string(line_no) +
                               ": expected 4 fields");
    }
    const std::size_t idx = parse_size(fields[0], path, line_no);
    if (idx != m.normalized.size()) {
      throw std::runtime_error("measure csv: line " + std::to_string(line_no) +
                               ": class indices must be 0,1,2,...");
    }
    m.unnormalized.push_back(parse_double(fields[1], path, line_no));
    m.normalized.push_back(parse_double(fields[2], path, line_no));
    const MeasureOrigin origin = measure_origin_from_string(fields[3]);
    if (origin_set && origin != m.origin) {
      throw std::runtime_error("measure csv: line " + std::to_string(line_no) +
                               ": mixed origins");
    }
    m.origin = origin;
    origin_set = true;
  }
  if (m.normalized.empty()) {
    throw std::runtime_error("measure csv: no rows in " + path.string());
  }
  return m;
}

}  // namespace imblab
