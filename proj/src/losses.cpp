#include "imblab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "imblab/matrix.hpp"
#include "imblab/mlp.hpp"

namespace imblab {

namespace {

void check_label(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("loss: label " + std::to_string(label) +
                                " out of range for " +
                                std::to_string(logits.size()) + " classes");
  }
  for (double s : logits) {
    if (!std::isfinite(s)) throw std::invalid_argument("loss: non-finite logit");
  }
}

void check_weights(const ClassWeights& weights, std::size_t num_classes) {
  if (weights.w.size() != num_classes) {
    throw std::invalid_argument("loss: weight vector length mismatch");
  }
  for (double w : weights.w) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("loss: class weights must be finite and >= 0");
    }
  }
}

// Rescale so the weights sum to the class count. A constant input vector
// maps to exact ones: both numerator and compensated denominator round to
// the same value, so each quotient is exactly 1.
ClassWeights rescale_to_class_count(std::vector<double> w) {
  const auto n = static_cast<double>(w.size());
  bool constant = true;
  for (double v : w) {
    if (v != w.front()) {
      constant = false;
      break;
    }
  }
  if (constant) {
    std::fill(w.begin(), w.end(), 1.0);
    return ClassWeights{std::move(w)};
  }
  const double total = neumaier_sum(w);
  if (!(total > 0.0)) {
    throw std::invalid_argument("weights: cannot rescale an all-zero vector");
  }
  for (double& v : w) v = v * n / total;
  return ClassWeights{std::move(w)};
}

void check_counts(std::span<const std::size_t> counts) {
  if (counts.empty()) throw std::invalid_argument("weights: empty class counts");
  for (std::size_t c : counts) {
    if (c == 0) throw std::invalid_argument("weights: class with zero examples");
  }
}

}  // namespace

LossGrad ce_loss(std::span<const double> logits, int label) {
  check_label(logits, label);
  LossGrad out;
  out.grad = softmax(logits);
  const double p_label = out.grad[static_cast<std::size_t>(label)];
  out.loss = -std::log(p_label);
  out.grad[static_cast<std::size_t>(label)] -= 1.0;  // softmax - onehot
  return out;
}

LossGrad weighted_ce_loss(std::span<const double> logits, int label,
                          const ClassWeights& weights) {
  check_weights(weights, logits.size());
  LossGrad out = ce_loss(logits, label);
  const double w = weights.w[static_cast<std::size_t>(label)];
  out.loss *= w;
  for (double& g : out.grad) g *= w;
  return out;
}

LossGrad focal_loss(std::span<const double> logits, int label, double gamma,
                    const ClassWeights* weights) {
  if (gamma < 0.0) throw std::invalid_argument("focal: gamma must be >= 0");
  check_label(logits, label);
  if (weights) check_weights(*weights, logits.size());

  const std::vector<double> p = softmax(logits);
  const double pl = p[static_cast<std::size_t>(label)];
  const double q = 1.0 - pl;
  const double w =
      weights ? weights->w[static_cast<std::size_t>(label)] : 1.0;

  // L = -w (1-pl)^gamma log(pl)
  // dL/dpl = w [gamma (1-pl)^(gamma-1) log(pl) - (1-pl)^gamma / pl]
  // dpl/ds_j = pl (1[j==label] - p_j)
  const double qg = std::pow(q, gamma);
  double dl_dpl = -w * qg / pl;
  if (gamma > 0.0 && q > 0.0) {
    dl_dpl += w * gamma * std::pow(q, gamma - 1.0) * std::log(pl);
  }

  LossGrad out;
  out.loss = -w * qg * std::log(pl);
  out.grad.resize(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double ind = (static_cast<int>(j) == label) ? 1.0 : 0.0;
    out.grad[j] = dl_dpl * pl * (ind - p[j]);
  }
  return out;
}

std::vector<double> margin_softmax(std::span<const double> logits, int label,
                                   const MarginSpec& margin) {
  check_label(logits, label);
  if (margin.deltas.size() != logits.size()) {
    throw std::invalid_argument("margin: delta vector length mismatch");
  }
  for (double d : margin.deltas) {
    if (!std::isfinite(d)) throw std::invalid_argument("margin: non-finite delta");
  }
  std::vector<double> adjusted(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (static_cast<int>(k) == label) {
      adjusted[k] = logits[k] - margin.deltas[k];
    } else {
      adjusted[k] = logits[k] - (margin.beta ? margin.deltas[k] : 0.0);
    }
  }
  return softmax(adjusted);
}

LossGrad margin_ce_loss(std::span<const double> logits, int label,
                        const MarginSpec& margin, const ClassWeights* weights) {
  if (weights) check_weights(*weights, logits.size());
  // The margins are constants wrt the logits, so the gradient keeps the
  // usual softmax - onehot shape, just with margin-adjusted probabilities.
  LossGrad out;
  out.grad = margin_softmax(logits, label, margin);
  const double w = weights ? weights->w[static_cast<std::size_t>(label)] : 1.0;
  out.loss = -w * std::log(out.grad[static_cast<std::size_t>(label)]);
  out.grad[static_cast<std::size_t>(label)] -= 1.0;
  if (w != 1.0) {
    for (double& g : out.grad) g *= w;
  }
  return out;
}

LossGrad eval_loss(std::span<const double> logits, int label,
                   const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::CrossEntropy:
      return ce_loss(logits, label);
    case LossKind::WeightedCE:
      if (!spec.weights) {
        throw std::invalid_argument("loss spec: weighted CE requires weights");
      }
      return weighted_ce_loss(logits, label, *spec.weights);
    case LossKind::Focal:
      return focal_loss(logits, label, spec.focal_gamma,
                        spec.weights ? &*spec.weights : nullptr);
    case LossKind::MarginCE:
      if (!spec.margin) {
        throw std::invalid_argument("loss spec: margin CE requires margins");
      }
      return margin_ce_loss(logits, label, *spec.margin,
                            spec.weights ? &*spec.weights : nullptr);
  }
  throw std::logic_error("loss spec: unknown kind");
}

ClassWeights inverse_count_weights(std::span<const std::size_t> class_counts) {
  check_counts(class_counts);
  std::vector<double> w(class_counts.size());
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    w[c] = 1.0 / static_cast<double>(class_counts[c]);
  }
  return rescale_to_class_count(std::move(w));
}

ClassWeights class_balanced_weights(std::span<const std::size_t> class_counts,
                                    double beta_eff) {
  check_counts(class_counts);
  if (!(beta_eff >= 0.0) || beta_eff >= 1.0) {
    throw std::invalid_argument("class-balanced: beta_eff must be in [0,1)");
  }
  std::vector<double> w(class_counts.size());
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    // Inverse of the effective number (1-beta^N)/(1-beta).
    const double n = static_cast<double>(class_counts[c]);
    w[c] = (1.0 - beta_eff) / (1.0 - std::pow(beta_eff, n));
  }
  return rescale_to_class_count(std::move(w));
}

ClassWeights uncertainty_weights(std::span<const double> mu_u) {
  if (mu_u.empty()) throw std::invalid_argument("uncertainty weights: empty measure");
  for (double m : mu_u) {
    if (!std::isfinite(m) || m < 0.0) {
      throw std::invalid_argument("uncertainty weights: measure entries must be finite and >= 0");
    }
  }
  const double total = neumaier_sum(mu_u);
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("uncertainty weights: measure is not normalized (sum " +
                                std::to_string(total) + ")");
  }
  std::vector<double> w(mu_u.size());
  const auto n = static_cast<double>(mu_u.size());
  for (std::size_t c = 0; c < mu_u.size(); ++c) w[c] = mu_u[c] * n;
  return ClassWeights{std::move(w)};
}

ClassWeights combined_weights(const ClassWeights& w_u, const ClassWeights& w_c,
                              double mix) {
  if (w_u.w.size() != w_c.w.size()) {
    throw std::invalid_argument("combined: weight vector lengths disagree");
  }
  if (!(mix >= 0.0 && mix <= 1.0)) {
    throw std::invalid_argument("combined: mix must be in [0,1]");
  }
  std::vector<double> w(w_u.w.size());
  for (std::size_t c = 0; c < w.size(); ++c) {
    w[c] = std::lerp(w_c.w[c], w_u.w[c], mix);
  }
  return ClassWeights{std::move(w)};
}

MarginSpec count_margins(std::span<const std::size_t> class_counts, double tau) {
  check_counts(class_counts);
  if (!(tau > 0.0)) throw std::invalid_argument("count margins: tau must be > 0");
  MarginSpec m;
  m.beta = false;
  m.deltas.resize(class_counts.size());
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    m.deltas[c] = tau / std::pow(static_cast<double>(class_counts[c]), 0.25);
  }
  return m;
}

MarginSpec logit_adjusted_margins(std::span<const std::size_t> class_counts,
                                  double kappa) {
  check_counts(class_counts);
  std::size_t total = 0;
  for (std::size_t n : class_counts) total += n;
  MarginSpec m;
  m.beta = true;
  m.deltas.resize(class_counts.size());
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    const double prior =
        static_cast<double>(class_counts[c]) / static_cast<double>(total);
    m.deltas[c] = -kappa * std::log(prior);
  }
  return m;
}

MarginSpec uncertainty_margins(std::span<const double> mu_u_unnormalized, double tau) {
  if (mu_u_unnormalized.empty()) throw std::invalid_argument("uncertainty margins: empty measure");
  double max_mu = 0.0;
  for (double m : mu_u_unnormalized) {
    if (!std::isfinite(m) || m < 0.0) {
      throw std::invalid_argument("uncertainty margins: measure entries must be finite and >= 0");
    }
    max_mu = std::max(max_mu, m);
  }
  if (max_mu == 0.0) {
    throw std::invalid_argument("uncertainty margins: all-zero uncertainty vector");
  }
  MarginSpec m;
  m.beta = false;
  m.deltas.resize(mu_u_unnormalized.size());
  for (std::size_t c = 0; c < m.deltas.size(); ++c) {
    m.deltas[c] = tau * (mu_u_unnormalized[c] / max_mu);
  }
  return m;
}

}  // namespace imblab
