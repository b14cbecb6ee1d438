#pragma once

// The adversary's-assistant regularizer r(theta, phi) = |grad_phi L_adv|^2,
// its estimators, the lambda heuristic and the assembled generator gradient.

#include <optional>
#include <span>
#include <vector>

#include "advas/autodiff.hpp"
#include "advas/nets.hpp"
#include "advas/objectives.hpp"
#include "advas/rng.hpp"

namespace advas {

enum class Estimator { kBiased, kUnbiasedProduct };

struct AdvasConfig {
  bool heuristic_lambda = true;
  double lambda = 1.0;  // used when heuristic_lambda is false
  Estimator estimator = Estimator::kBiased;
  bool include_gamma_adv = true;
  bool truncation_in_r = false;

  static AdvasConfig fixed(double lambda) {
    AdvasConfig cfg;
    cfg.heuristic_lambda = false;
    cfg.lambda = lambda;
    return cfg;
  }

  void validate() const;

  friend bool operator==(const AdvasConfig&, const AdvasConfig&) = default;
};

struct GradientBundle {
  std::vector<double> g_orig;
  std::vector<double> g_advas;
  double lambda_used = 0.0;
  std::vector<double> g_total;
  double l_gen = 0.0;
  double r = 0.0;
};

double l2_norm(std::span<const double> v);

/// Sum of squared entries of grad_phi `adversary_loss`, differentiable in everything upstream.
Var squared_gradient_norm(const Var& adversary_loss, std::span<const Var> phi);

/// <grad_phi loss_a, grad_phi loss_b> for two independently estimated losses.
Var gradient_product(const Var& loss_a, const Var& loss_b, std::span<const Var> phi);

/// Biased minibatch estimate of r as a graph node (second-order path through the fakes).
Var advas_penalty(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                  const Tensor& real, const Tensor& latents, Rng& rng, const AdvasConfig& config = {});

/// Unbiased product estimate X . X' from two independent batch pairs. May be negative.
Var advas_penalty_unbiased(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                           const Tensor& real_a, const Tensor& real_b, const Tensor& latents_a,
                           const Tensor& latents_b, Rng& rng, const AdvasConfig& config = {});

/// Dot product of two gradient estimates.
double unbiased_product(std::span<const double> x, std::span<const double> x_prime);

/// min(1, |g_orig| / |g_advas|), and 1 when g_advas is zero.
double lambda_heuristic(std::span<const double> g_orig, std::span<const double> g_advas);

/// g_total = g_orig + lambda * g_advas with lambda chosen per `config`.
GradientBundle combine_gradients(std::vector<double> g_orig, std::vector<double> g_advas,
                                 const AdvasConfig& config);

/// Batches for one generator update. The second pair is only used by the
/// unbiased estimator.
struct GeneratorBatch {
  Tensor real;
  Tensor latents;
  std::optional<Tensor> real_b;
  std::optional<Tensor> latents_b;
};

/// g_orig = grad_theta L_gen, g_advas = grad_theta r~, both on the same batch.
/// `generator` and `adversary` must be bound to leaf parameters.
GradientBundle total_generator_gradient(const ObjectiveSpec& spec, const AdvasConfig& config,
                                        const Network& generator, const Network& adversary,
                                        const GeneratorBatch& batch, Rng& rng);

}  // namespace advas
