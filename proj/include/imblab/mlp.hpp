#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "imblab/matrix.hpp"

namespace imblab {

struct LossSpec;

// Dense feedforward classifier with rectifier hidden units. Weights are
// stored input-major, so a batch row-vector is propagated as x * W + b.
struct MlpModel {
  std::vector<std::size_t> layer_dims;  // input, hidden..., class count
  std::vector<Matrix> weights;          // weights[l] is dims[l] x dims[l+1]
  std::vector<std::vector<double>> biases;

  std::size_t num_classes() const { return layer_dims.back(); }
  std::size_t input_dim() const { return layer_dims.front(); }
};

// Heavy-ball momentum state: v <- momentum*v - lr*g; theta <- theta + v.
struct SgdState {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::vector<Matrix> weight_vel;
  std::vector<std::vector<double>> bias_vel;
};

// Zero-mean Gaussian init scaled by fan-in (variance 2/fan_in), zero biases.
MlpModel init_model(const std::vector<std::size_t>& dims, std::uint64_t seed);

SgdState make_sgd_state(const MlpModel& model, double learning_rate,
                        double momentum, double weight_decay = 0.0);

Matrix forward(const MlpModel& model, const Matrix& batch);

// Numerically stable softmax (max-subtraction); entries in (0,1], sum 1.
std::vector<double> softmax(std::span<const double> logits);

// One momentum-SGD step on the mean per-example loss of the batch.
// Returns the pre-step mini-batch loss.
double backward_and_step(MlpModel& model, SgdState& state, const Matrix& batch,
                         std::span<const int> labels, const LossSpec& loss_spec);

// Checkpoint round-trip is bit-exact for 64-bit parameter values.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace imblab
