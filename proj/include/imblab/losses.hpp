#pragma once

#include <optional>
#include <span>
#include <vector>

namespace imblab {

// Per-class loss weights, constant within a class.
struct ClassWeights {
  std::vector<double> w;
};

// Per-class logit margins. With beta set, the margins of the non-label
// classes also enter the softmax denominator; without it only the label
// class is shifted.
struct MarginSpec {
  std::vector<double> deltas;
  bool beta = false;
};

enum class LossKind { CrossEntropy, WeightedCE, Focal, MarginCE };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  std::optional<ClassWeights> weights;  // WeightedCE; optional for Focal/MarginCE
  std::optional<MarginSpec> margin;     // MarginCE only
  double focal_gamma = 2.0;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

LossGrad ce_loss(std::span<const double> logits, int label);
LossGrad weighted_ce_loss(std::span<const double> logits, int label,
                          const ClassWeights& weights);
LossGrad focal_loss(std::span<const double> logits, int label, double gamma,
                    const ClassWeights* weights = nullptr);

// Margin-adjusted class probabilities: the label class contributes
// exp(s_c - delta_c); every other class k contributes
// exp(s_k - delta_k * beta).
std::vector<double> margin_softmax(std::span<const double> logits, int label,
                                   const MarginSpec& margin);
LossGrad margin_ce_loss(std::span<const double> logits, int label,
                        const MarginSpec& margin,
                        const ClassWeights* weights = nullptr);

// Dispatch on spec.kind; validates that the spec carries what it needs.
LossGrad eval_loss(std::span<const double> logits, int label,
                   const LossSpec& spec);

// ---- per-class weight and margin constructors ----
//
// Every weight constructor rescales its output to sum to the class count,
// matching the no-reweighting case where every weight is 1.

// w_c proportional to 1/N_c.
ClassWeights inverse_count_weights(std::span<const std::size_t> class_counts);

// w_c proportional to (1-beta_eff)/(1-beta_eff^N_c); approaches the inverse-count weights as
// beta_eff -> 1 and uniform weights as beta_eff -> 0.
ClassWeights class_balanced_weights(std::span<const std::size_t> class_counts,
                                    double beta_eff);

// w_c = mu_u_c * |C| for a normalized uncertainty measure.
ClassWeights uncertainty_weights(std::span<const double> mu_u);

// Convex combination mix*w_u + (1-mix)*w_c.
ClassWeights combined_weights(const ClassWeights& w_u, const ClassWeights& w_c,
                              double mix);

// delta_c = tau / N_c^(1/4), label-class-only margins.
MarginSpec count_margins(std::span<const std::size_t> class_counts, double tau);

// delta_c = -kappa * log(N_c / sum_k N_k), margins on all classes.
MarginSpec logit_adjusted_margins(std::span<const std::size_t> class_counts,
                                  double kappa);

// delta_c = tau * mu_u_c / max_k mu_u_k from unnormalized class
// uncertainties; the largest margin is exactly tau.
MarginSpec uncertainty_margins(std::span<const double> mu_u_unnormalized, double tau);

}  // namespace imblab
