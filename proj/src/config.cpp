#include "imblab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "imblab/io_util.hpp"

namespace imblab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      fail(where, "unknown key '" + key + "'");
    }
  }
}

double get_number(const json& obj, const std::string& where,
                  const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(where, "'" + key + "' must be a number");
  return obj[key].get<double>();
}

std::size_t get_count(const json& obj, const std::string& where,
                      const std::string& key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_unsigned()) {
    fail(where, "'" + key + "' must be a nonnegative integer");
  }
  return obj[key].get<std::size_t>();
}

std::string get_string(const json& obj, const std::string& where,
                       const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) fail(where, "'" + key + "' must be a string");
  return obj[key].get<std::string>();
}

std::vector<double> get_number_list(const json& obj, const std::string& where,
                                    const std::string& key) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  if (!obj[key].is_array()) fail(where, "'" + key + "' must be an array");
  for (const auto& v : obj[key]) {
    if (!v.is_number()) fail(where, "'" + key + "' entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void parse_dataset(const json& j, DatasetSpec& spec) {
  const std::string where = "dataset";
  if (!j.is_object()) fail(where, "must be an object");
  const std::string kind = get_string(j, where, "kind", "");
  if (kind == "longtail") {
    spec.kind = DatasetSpec::Kind::LongTail;
    check_keys(j, where,
               {"kind", "num_classes", "dim", "n_bar", "imbalance_ratio",
                "noise", "spacing"});
    spec.num_classes = get_count(j, where, "num_classes", spec.num_classes);
    spec.dim = get_count(j, where, "dim", spec.dim);
    spec.n_bar = get_count(j, where, "n_bar", spec.n_bar);
    spec.imbalance_ratio =
        get_number(j, where, "imbalance_ratio", spec.imbalance_ratio);
    spec.noise = get_number(j, where, "noise", spec.noise);
    spec.spacing = get_number(j, where, "spacing", spec.spacing);
  } else if (kind == "semantic") {
    spec.kind = DatasetSpec::Kind::Semantic;
    check_keys(j, where,
               {"kind", "num_easy", "num_hard", "per_class_count", "dim",
                "easy_noise", "hard_noise", "spacing"});
    spec.semantic.num_easy = get_count(j, where, "num_easy", 2);
    spec.semantic.num_hard = get_count(j, where, "num_hard", 2);
    spec.semantic.per_class_count = get_count(j, where, "per_class_count", 200);
    spec.semantic.dim = get_count(j, where, "dim", 8);
    spec.semantic.easy_noise = get_number(j, where, "easy_noise", 0.3);
    spec.semantic.hard_noise = get_number(j, where, "hard_noise", 1.0);
    spec.semantic.class_center_spacing = get_number(j, where, "spacing", 1.0);
  } else if (kind == "file") {
    spec.kind = DatasetSpec::Kind::File;
    check_keys(j, where, {"kind", "train_path", "test_path"});
    spec.train_path = get_string(j, where, "train_path", "");
    spec.test_path = get_string(j, where, "test_path", "");
    if (spec.train_path.empty()) fail(where, "'train_path' is required");
  } else {
    fail(where, "'kind' must be one of longtail, semantic, file");
  }
}

void parse_model(const json& j, ModelConfig& model) {
  const std::string where = "model";
  if (!j.is_object()) fail(where, "must be an object");
  check_keys(j, where, {"hidden_dims"});
  if (j.contains("hidden_dims")) {
    if (!j["hidden_dims"].is_array()) fail(where, "'hidden_dims' must be an array");
    model.hidden_dims.clear();
    for (const auto& v : j["hidden_dims"]) {
      if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
        fail(where, "'hidden_dims' entries must be positive integers");
      }
      model.hidden_dims.push_back(v.get<std::size_t>());
    }
  }
}

void parse_optim(const json& j, OptimConfig& optim) {
  const std::string where = "optim";
  if (!j.is_object()) fail(where, "must be an object");
  check_keys(j, where,
             {"learning_rate", "momentum", "weight_decay", "batch_size",
              "lr_decay_epochs", "lr_decay_factor"});
  optim.learning_rate = get_number(j, where, "learning_rate", optim.learning_rate);
  optim.momentum = get_number(j, where, "momentum", optim.momentum);
  optim.weight_decay = get_number(j, where, "weight_decay", optim.weight_decay);
  optim.batch_size = get_count(j, where, "batch_size", optim.batch_size);
  for (double e : get_number_list(j, where, "lr_decay_epochs")) {
    if (e < 0.0) fail(where, "'lr_decay_epochs' entries must be >= 0");
    optim.lr_decay_epochs.push_back(static_cast<std::size_t>(e));
  }
  optim.lr_decay_factor =
      get_number(j, where, "lr_decay_factor", optim.lr_decay_factor);
}

void parse_train(const json& j, CliConfig::TrainSection& train) {
  const std::string where = "train";
  if (!j.is_object()) fail(where, "must be an object");
  check_keys(j, where,
             {"epochs", "method", "stage1_epochs", "stage2_epochs",
              "measure_file"});
  train.epochs = get_count(j, where, "epochs", train.epochs);
  train.method = get_string(j, where, "method", train.method);
  train.stage1_epochs = get_count(j, where, "stage1_epochs", train.stage1_epochs);
  train.stage2_epochs = get_count(j, where, "stage2_epochs", train.stage2_epochs);
  const std::string measure = get_string(j, where, "measure_file", "");
  if (!measure.empty()) train.measure_file = measure;
}

void parse_ensemble(const json& j, CliConfig::EnsembleSection& ensemble) {
  const std::string where = "ensemble";
  if (!j.is_object()) fail(where, "must be an object");
  check_keys(j, where, {"members", "epochs"});
  ensemble.members = get_count(j, where, "members", ensemble.members);
  ensemble.epochs = get_count(j, where, "epochs", ensemble.epochs);
  if (ensemble.members == 0) fail(where, "'members' must be >= 1");
}

void parse_analysis(const json& j, CliConfig::AnalysisSection& analysis) {
  const std::string where = "analysis";
  if (!j.is_object()) fail(where, "must be an object");
  check_keys(j, where, {"kind", "ir_list", "strength_list", "methods"});
  const std::string kind = get_string(j, where, "kind", "");
  try {
    analysis.kind = analysis_kind_from_string(kind);
  } catch (const std::invalid_argument&) {
    fail(where, "'kind' must be one of alignment, ir-sweep, duplication-sweep, "
                "mitigation-compare");
  }
  if (j.contains("ir_list")) {
    analysis.ir_list = get_number_list(j, where, "ir_list");
    if (analysis.ir_list.empty()) fail(where, "'ir_list' must not be empty");
  }
  if (j.contains("strength_list")) {
    analysis.strength_list = get_number_list(j, where, "strength_list");
    if (analysis.strength_list.empty()) {
      fail(where, "'strength_list' must not be empty");
    }
  }
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) fail(where, "'methods' must be an array");
    for (const auto& v : j["methods"]) {
      if (!v.is_string()) fail(where, "'methods' entries must be strings");
      analysis.methods.push_back(v.get<std::string>());
    }
  }
}

}  // namespace

CliConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + origin + ": " + e.what());
  }
  if (!j.is_object()) fail(origin, "top level must be an object");
  check_keys(j, origin,
             {"seeds", "output", "test_per_class", "jobs", "dataset", "model",
              "optim", "train", "ensemble", "analysis"});

  CliConfig config;
  config.hash = fnv1a_hex(text);

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) {
      fail(origin, "'seeds' must be a non-empty array");
    }
    for (const auto& v : j["seeds"]) {
      if (!v.is_number_unsigned()) {
        fail(origin, "'seeds' entries must be nonnegative integers");
      }
      config.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  const std::string out = get_string(j, origin, "output", "");
  if (!out.empty()) config.output = out;
  config.test_per_class =
      get_count(j, origin, "test_per_class", config.test_per_class);
  config.jobs = get_count(j, origin, "jobs", config.jobs);

  if (j.contains("dataset")) {
    config.has_dataset = true;
    parse_dataset(j["dataset"], config.dataset);
  }
  if (j.contains("model")) {
    config.has_model = true;
    parse_model(j["model"], config.model);
  }
  if (j.contains("optim")) {
    config.has_optim = true;
    parse_optim(j["optim"], config.optim);
  }
  if (j.contains("train")) {
    config.has_train = true;
    parse_train(j["train"], config.train);
  }
  if (j.contains("ensemble")) {
    config.has_ensemble = true;
    parse_ensemble(j["ensemble"], config.ensemble);
  }
  if (j.contains("analysis")) {
    config.has_analysis = true;
    parse_analysis(j["analysis"], config.analysis);
  }
  return config;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

ExperimentConfig experiment_config(const CliConfig& config) {
  ExperimentConfig exp;
  exp.model = config.model;
  exp.optim = config.optim;
  exp.train_epochs = config.train.epochs;
  exp.ensemble_members = config.ensemble.members;
  exp.ensemble_epochs = config.ensemble.epochs;
  exp.test_per_class = config.test_per_class;
  exp.jobs = config.jobs;
  return exp;
}

}  // namespace imblab
