#include "imblab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "imblab/losses.hpp"
#include "imblab/rng.hpp"

namespace imblab {

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'L', 'P', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) {
    throw std::invalid_argument("mlp: need at least input and output layer");
  }
  for (std::size_t d : dims) {
    if (d == 0) throw std::invalid_argument("mlp: zero-sized layer");
  }
}

struct ForwardTrace {
  std::vector<Matrix> activations;  // activations[0] is the input batch
  Matrix logits;
};

ForwardTrace forward_trace(const MlpModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim()) {
    throw std::invalid_argument(
        "mlp forward: batch has " + std::to_string(batch.cols()) +
        " features, model expects " + std::to_string(model.input_dim()));
  }
  if (!batch.all_finite()) {
    throw std::invalid_argument("mlp forward: non-finite input");
  }
  ForwardTrace trace;
  trace.activations.reserve(model.weights.size());
  trace.activations.push_back(batch);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Matrix z = matmul(trace.activations.back(), model.weights[l]);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      double* row = z.row(i).data();
      for (std::size_t j = 0; j < z.cols(); ++j) row[j] += model.biases[l][j];
    }
    if (l + 1 < model.weights.size()) {
      for (double& v : z.data()) v = std::max(v, 0.0);  // rectifier
      trace.activations.push_back(std::move(z));
    } else {
      trace.logits = std::move(z);
    }
  }
  return trace;
}

}  // namespace

MlpModel init_model(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  check_dims(dims);
  MlpModel model;
  model.layer_dims = dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l], dims[l + 1]);
    const double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
    for (double& v : w.data()) v = scale * rng.normal();
    model.weights.push_back(std::move(w));
    model.biases.emplace_back(dims[l + 1], 0.0);
  }
  return model;
}

SgdState make_sgd_state(const MlpModel& model, double learning_rate,
                        double momentum, double weight_decay) {
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("sgd: learning rate must be >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("sgd: momentum must be in [0,1)");
  }
  SgdState state;
  state.learning_rate = learning_rate;
  state.momentum = momentum;
  state.weight_decay = weight_decay;
  for (const Matrix& w : model.weights) {
    state.weight_vel.emplace_back(w.rows(), w.cols());
  }
  for (const auto& b : model.biases) {
    state.bias_vel.emplace_back(b.size(), 0.0);
  }
  return state;
}

Matrix forward(const MlpModel& model, const Matrix& batch) {
  return forward_trace(model, batch).logits;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  double max_logit = logits[0];
  for (double s : logits) {
    if (!std::isfinite(s)) throw std::invalid_argument("softmax: non-finite logit");
    max_logit = std::max(max_logit, s);
  }
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(logits[c] - max_logit);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

double backward_and_step(MlpModel& model, SgdState& state, const Matrix& batch,
                         std::span<const int> labels, const LossSpec& loss_spec) {
  if (labels.size() != batch.rows()) {
    throw std::invalid_argument("mlp step: batch and labels disagree");
  }
  ForwardTrace trace = forward_trace(model, batch);
  const std::size_t m = batch.rows();
  const double inv_m = 1.0 / static_cast<double>(m);

  // Mean loss over the batch; per-logit gradients scaled by 1/m.
  Matrix dz(trace.logits.rows(), trace.logits.cols());
  double batch_loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    LossGrad lg = eval_loss(trace.logits.row(i), labels[i], loss_spec);
    batch_loss += lg.loss;
    double* drow = dz.row(i).data();
    for (std::size_t c = 0; c < dz.cols(); ++c) drow[c] = lg.grad[c] * inv_m;
  }
  batch_loss *= inv_m;

  // Backpropagate layer by layer, updating as we go.
  for (std::size_t l = model.weights.size(); l-- > 0;) {
    const Matrix& a_prev = trace.activations[l];
    Matrix& w = model.weights[l];

    // dW = a_prev^T * dz, db = column sums of dz.
    Matrix dw(w.rows(), w.cols());
    for (std::size_t i = 0; i < a_prev.rows(); ++i) {
      const double* arow = a_prev.row(i).data();
      const double* zrow = dz.row(i).data();
      for (std::size_t r = 0; r < w.rows(); ++r) {
        const double a = arow[r];
        if (a == 0.0) continue;
        double* dwrow = dw.row(r).data();
        for (std::size_t c = 0; c < w.cols(); ++c) dwrow[c] += a * zrow[c];
      }
    }
    std::vector<double> db(w.cols(), 0.0);
    for (std::size_t i = 0; i < dz.rows(); ++i) {
      const double* zrow = dz.row(i).data();
      for (std::size_t c = 0; c < dz.cols(); ++c) db[c] += zrow[c];
    }

    if (state.weight_decay != 0.0) {
      for (std::size_t k = 0; k < dw.data().size(); ++k) {
        dw.data()[k] += state.weight_decay * w.data()[k];
      }
    }

    for (double g : dw.data()) {
      if (!std::isfinite(g)) {
        throw std::runtime_error("mlp step: non-finite gradient in layer " +
                                 std::to_string(l));
      }
    }

    // Propagate into the previous layer before touching the weights.
    if (l > 0) {
      Matrix da(a_prev.rows(), a_prev.cols());
      for (std::size_t i = 0; i < dz.rows(); ++i) {
        const double* zrow = dz.row(i).data();
        double* darow = da.row(i).data();
        for (std::size_t c = 0; c < dz.cols(); ++c) {
          const double g = zrow[c];
          if (g == 0.0) continue;
          for (std::size_t r = 0; r < w.rows(); ++r) {
            darow[r] += g * w(r, c);
          }
        }
      }
      // Rectifier gate: a_prev > 0 iff the pre-activation was positive.
      for (std::size_t k = 0; k < da.data().size(); ++k) {
        if (a_prev.data()[k] <= 0.0) da.data()[k] = 0.0;
      }
      dz = std::move(da);
    }

    // Heavy-ball update: v <- momentum*v - lr*g; theta <- theta + v.
    Matrix& wv = state.weight_vel[l];
    for (std::size_t k = 0; k < w.data().size(); ++k) {
      wv.data()[k] = state.momentum * wv.data()[k] -
                     state.learning_rate * dw.data()[k];
      w.data()[k] += wv.data()[k];
    }
    std::vector<double>& bv = state.bias_vel[l];
    for (std::size_t c = 0; c < db.size(); ++c) {
      bv[c] = state.momentum * bv[c] - state.learning_rate * db[c];
      model.biases[l][c] += bv[c];
    }
  }
  return batch_loss;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  out.write(kCheckpointMagic, 4);
  auto put_u32 = [&](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  put_u32(kCheckpointVersion);
  put_u32(static_cast<std::uint32_t>(model.layer_dims.size()));
  for (std::size_t d : model.layer_dims) put_u32(static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const auto& wd = model.weights[l].data();
    out.write(reinterpret_cast<const char*>(wd.data()),
              static_cast<std::streamsize>(wd.size() * sizeof(double)));
    const auto& b = model.biases[l];
    out.write(reinterpret_cast<const char*>(b.data()),
              static_cast<std::streamsize>(b.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  const std::uint32_t version = get_u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  const std::uint32_t n_dims = get_u32();
  std::vector<std::size_t> dims(n_dims);
  for (auto& d : dims) d = get_u32();
  check_dims(dims);
  MlpModel model;
  model.layer_dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l], dims[l + 1]);
    in.read(reinterpret_cast<char*>(w.data().data()),
            static_cast<std::streamsize>(w.data().size() * sizeof(double)));
    std::vector<double> b(dims[l + 1]);
    in.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(b.size() * sizeof(double)));
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  if (!in) throw std::runtime_error("checkpoint: truncated file " + path.string());
  return model;
}

}  // namespace imblab
