#include "imblab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "imblab/io_util.hpp"

namespace imblab {

namespace {

constexpr char kEnspMagic[4] = {'E', 'N', 'S', 'P'};
constexpr double kRowSumTol = 1e-9;

void check_prob_row(std::span<const double> row) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("probability row has entry outside [0,1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kRowSumTol) {
    throw std::invalid_argument("probability row sums to " +
                                format_double(total) + ", expected 1");
  }
}

}  // namespace

void validate_predictions(const EnsemblePredictions& ens) {
  if (ens.t_members == 0) throw std::invalid_argument("ensemble: no members");
  if (ens.num_examples == 0 || ens.num_classes == 0) {
    throw std::invalid_argument("ensemble: empty prediction grid");
  }
  if (ens.probs.size() != ens.t_members * ens.num_examples * ens.num_classes) {
    throw std::invalid_argument("ensemble: prob buffer has wrong length");
  }
  for (std::size_t t = 0; t < ens.t_members; ++t) {
    for (std::size_t i = 0; i < ens.num_examples; ++i) {
      check_prob_row(ens.member_row(t, i));
    }
  }
}

std::vector<MlpModel> train_ensemble(const Dataset& train,
                                     const ModelConfig& model_config,
                                     const OptimConfig& optim,
                                     std::size_t epochs, std::size_t t_members,
                                     std::uint64_t base_seed,
                                     std::size_t jobs) {
  if (t_members == 0) throw std::invalid_argument("ensemble: T must be >= 1");
  if (jobs == 0) jobs = 1;
  std::vector<MlpModel> members(t_members);
  std::vector<std::string> failures(t_members);

  auto train_member = [&](std::size_t t) {
    try {
      members[t] = train_one_stage(train, model_config, optim,
                                   naive_stage(epochs), base_seed + t)
                       .model;
    } catch (const std::exception& e) {
      failures[t] = e.what();
    }
  };

  if (jobs == 1) {
    for (std::size_t t = 0; t < t_members; ++t) train_member(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(jobs, t_members); ++w) {
      pool.emplace_back([&, w]() {
        for (std::size_t t = w; t < t_members; t += jobs) train_member(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < t_members; ++t) {
    if (!failures[t].empty()) {
      throw std::runtime_error("ensemble member " + std::to_string(t) +
                               " failed: " + failures[t]);
    }
  }
  return members;
}

EnsemblePredictions predict_ensemble(const std::vector<MlpModel>& members,
                                     const Matrix& features) {
  if (members.empty()) throw std::invalid_argument("ensemble: no members");
  EnsemblePredictions ens;
  ens.t_members = members.size();
  ens.num_examples = features.rows();
  ens.num_classes = members[0].num_classes();
  ens.probs.resize(ens.t_members * ens.num_examples * ens.num_classes);
  for (std::size_t t = 0; t < members.size(); ++t) {
    if (members[t].num_classes() != ens.num_classes) {
      throw std::invalid_argument("ensemble: members disagree on class count");
    }
    const Matrix logits = forward(members[t], features);
    for (std::size_t i = 0; i < ens.num_examples; ++i) {
      const std::vector<double> p = softmax(logits.row(i));
      std::copy(p.begin(), p.end(),
                ens.probs.begin() +
                    static_cast<long>((t * ens.num_examples + i) *
                                      ens.num_classes));
    }
  }
  return ens;
}

Matrix mean_prediction(const EnsemblePredictions& ens) {
  validate_predictions(ens);
  Matrix mean(ens.num_examples, ens.num_classes);
  const double inv_t = 1.0 / static_cast<double>(ens.t_members);
  for (std::size_t t = 0; t < ens.t_members; ++t) {
    for (std::size_t i = 0; i < ens.num_examples; ++i) {
      const auto row = ens.member_row(t, i);
      double* out = mean.row(i).data();
      for (std::size_t c = 0; c < ens.num_classes; ++c) out[c] += row[c];
    }
  }
  for (double& v : mean.data()) v *= inv_t;
  return mean;
}

double predictive_entropy(std::span<const double> probs) {
  check_prob_row(probs);
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> per_example_uncertainty(const EnsemblePredictions& ens) {
  const Matrix mean = mean_prediction(ens);
  std::vector<double> u;
  u.reserve(mean.rows());
  for (std::size_t i = 0; i < mean.rows(); ++i) {
    u.push_back(predictive_entropy(mean.row(i)));
  }
  return u;
}

std::pair<std::vector<double>, std::vector<double>> class_uncertainty(
    std::span<const double> per_example_u, std::span<const int> labels,
    std::size_t num_classes) {
  if (per_example_u.size() != labels.size()) {
    throw std::invalid_argument("class uncertainty: u/labels size mismatch");
  }
  if (num_classes == 0) {
    throw std::invalid_argument("class uncertainty: no classes");
  }
  std::vector<double> sums(num_classes, 0.0);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw std::invalid_argument("class uncertainty: label out of range");
    }
    if (!(per_example_u[i] >= 0.0)) {
      throw std::invalid_argument("class uncertainty: negative uncertainty");
    }
    sums[static_cast<std::size_t>(y)] += per_example_u[i];
    counts[static_cast<std::size_t>(y)]++;
  }
  std::vector<double> raw(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("class uncertainty: class " +
                                  std::to_string(c) + " has no examples");
    }
    raw[c] = sums[c] / static_cast<double>(counts[c]);
  }
  return {raw, normalize(raw)};
}

std::vector<double> epistemic_mi(const EnsemblePredictions& ens) {
  const std::vector<double> total = per_example_uncertainty(ens);
  const std::vector<double> expected = aleatoric_ee(ens);
  std::vector<double> mi(total.size());
  for (std::size_t i = 0; i < mi.size(); ++i) {
    mi[i] = std::max(0.0, total[i] - expected[i]);
  }
  return mi;
}

std::vector<double> aleatoric_ee(const EnsemblePredictions& ens) {
  validate_predictions(ens);
  std::vector<double> ee(ens.num_examples, 0.0);
  for (std::size_t t = 0; t < ens.t_members; ++t) {
    for (std::size_t i = 0; i < ens.num_examples; ++i) {
      ee[i] += predictive_entropy(ens.member_row(t, i));
    }
  }
  const double inv_t = 1.0 / static_cast<double>(ens.t_members);
  for (double& v : ee) v *= inv_t;
  return ee;
}

UncertaintyReport uncertainty_report(const EnsemblePredictions& ens,
                                     std::span<const int> labels,
                                     bool with_decomposition) {
  UncertaintyReport report;
  report.per_example_u = per_example_uncertainty(ens);
  auto [raw, normed] =
      class_uncertainty(report.per_example_u, labels, ens.num_classes);
  report.class_unnormalized = std::move(raw);
  report.class_normalized = std::move(normed);
  if (with_decomposition) {
    report.epistemic = epistemic_mi(ens);
    report.aleatoric = aleatoric_ee(ens);
  }
  return report;
}

ImbalanceMeasure uncertainty_measure(const UncertaintyReport& report) {
  ImbalanceMeasure m;
  m.origin = MeasureOrigin::Uncertainty;
  m.unnormalized = report.class_unnormalized;
  m.normalized = report.class_normalized;
  return m;
}

void save_predictions_bin(const EnsemblePredictions& ens,
                          const std::filesystem::path& path) {
  validate_predictions(ens);
  std::string payload;
  payload.reserve(16 + ens.probs.size() * 8);
  payload.append(kEnspMagic, 4);
  auto put_u32 = [&](std::uint32_t v) {
    payload.append(reinterpret_cast<const char*>(&v), 4);
  };
  put_u32(static_cast<std::uint32_t>(ens.t_members));
  put_u32(static_cast<std::uint32_t>(ens.num_examples));
  put_u32(static_cast<std::uint32_t>(ens.num_classes));
  payload.append(reinterpret_cast<const char*>(ens.probs.data()),
                 ens.probs.size() * sizeof(double));
  write_file_atomic(path, payload);
}

EnsemblePredictions load_predictions_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ensemble bin: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kEnspMagic, 4) != 0) {
    throw std::runtime_error("ensemble bin: bad magic in " + path.string());
  }
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  EnsemblePredictions ens;
  ens.t_members = get_u32();
  ens.num_examples = get_u32();
  ens.num_classes = get_u32();
  if (!in) throw std::runtime_error("ensemble bin: truncated header");
  ens.probs.resize(ens.t_members * ens.num_examples * ens.num_classes);
  in.read(reinterpret_cast<char*>(ens.probs.data()),
          static_cast<std::streamsize>(ens.probs.size() * 8));
  if (!in) throw std::runtime_error("ensemble bin: truncated file " + path.string());
  validate_predictions(ens);
  return ens;
}

void save_predictions_csv(const EnsemblePredictions& ens,
                          const std::filesystem::path& path) {
  validate_predictions(ens);
  std::ostringstream out;
  out << "member,example_index,class_index,prob\n";
  for (std::size_t t = 0; t < ens.t_members; ++t) {
    for (std::size_t i = 0; i < ens.num_examples; ++i) {
      const auto row = ens.member_row(t, i);
      for (std::size_t c = 0; c < ens.num_classes; ++c) {
        out << t << ',' << i << ',' << c << ',' << format_double(row[c]) << '\n';
      }
    }
  }
  write_file_atomic(path, out.str());
}

void save_uncertainty_csv(const UncertaintyReport& report,
                          const std::filesystem::path& path) {
  if (report.class_unnormalized.size() != report.class_normalized.size()) {
    throw std::invalid_argument("uncertainty csv: column size mismatch");
  }
  std::ostringstream out;
  out << "class_index,mu_tilde,mu\n";
  for (std::size_t c = 0; c < report.class_normalized.size(); ++c) {
    out << c << ',' << format_double(report.class_unnormalized[c]) << ','
        << format_double(report.class_normalized[c]) << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace imblab
