#include "advas/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advas {

void AdvasConfig::validate() const {
  if (!heuristic_lambda && !(lambda >= 0.0)) throw std::invalid_argument("fixed lambda must be >= 0");
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Var squared_gradient_norm(const Var& adversary_loss, std::span<const Var> phi) {
  const auto grads = gradient(adversary_loss, phi, GradMode::kCreateGraph);
  Var total = Var::scalar(0.0);
  for (const auto& g : grads) total = total + l2norm_squared(g);
  return total;
}

Var gradient_product(const Var& loss_a, const Var& loss_b, std::span<const Var> phi) {
  const auto ga = gradient(loss_a, phi, GradMode::kCreateGraph);
  const auto gb = gradient(loss_b, phi, GradMode::kCreateGraph);
  Var total = Var::scalar(0.0);
  for (std::size_t i = 0; i < ga.size(); ++i) total = total + sum(mul(ga[i], gb[i]));
  return total;
}

namespace {

AdversaryLossOptions loss_options(const AdvasConfig& config) {
  return AdversaryLossOptions{.truncate = config.truncation_in_r, .include_gamma = config.include_gamma_adv};
}

}  // namespace

Var advas_penalty(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                  const Tensor& real, const Tensor& latents, Rng& rng, const AdvasConfig& config) {
  const auto loss = adversary_loss(spec, generator, adversary, real, latents, rng, loss_options(config));
  return squared_gradient_norm(loss.value, adversary.params());
}

Var advas_penalty_unbiased(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                           const Tensor& real_a, const Tensor& real_b, const Tensor& latents_a,
                           const Tensor& latents_b, Rng& rng, const AdvasConfig& config) {
  const auto opts = loss_options(config);
  const auto loss_a = adversary_loss(spec, generator, adversary, real_a, latents_a, rng, opts);
  const auto loss_b = adversary_loss(spec, generator, adversary, real_b, latents_b, rng, opts);
  return gradient_product(loss_a.value, loss_b.value, adversary.params());
}

double unbiased_product(std::span<const double> x, std::span<const double> x_prime) {
  if (x.size() != x_prime.size()) throw ShapeError("unbiased_product: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * x_prime[i];
  return s;
}

double lambda_heuristic(std::span<const double> g_orig, std::span<const double> g_advas) {
  const double advas_norm = l2_norm(g_advas);
  if (advas_norm == 0.0) return 1.0;
  return std::min(1.0, l2_norm(g_orig) / advas_norm);
}

GradientBundle combine_gradients(std::vector<double> g_orig, std::vector<double> g_advas,
                                 const AdvasConfig& config) {
  if (g_orig.size() != g_advas.size()) throw ShapeError("combine_gradients: length mismatch");
  GradientBundle bundle;
  bundle.lambda_used = config.heuristic_lambda ? lambda_heuristic(g_orig, g_advas) : config.lambda;
  bundle.g_total.resize(g_orig.size());
  for (std::size_t i = 0; i < g_orig.size(); ++i) {
    bundle.g_total[i] = g_orig[i] + bundle.lambda_used * g_advas[i];
  }
  bundle.g_orig = std::move(g_orig);
  bundle.g_advas = std::move(g_advas);
  return bundle;
}

GradientBundle total_generator_gradient(const ObjectiveSpec& spec, const AdvasConfig& config,
                                        const Network& generator, const Network& adversary,
                                        const GeneratorBatch& batch, Rng& rng) {
  const auto theta = generator.params();
  const auto l_gen = generator_loss(spec, generator, adversary, batch.real, batch.latents);
  auto g_orig = flatten_values(gradient(l_gen.value, theta));

  Var r;
  if (config.estimator == Estimator::kUnbiasedProduct) {
    if (!batch.real_b || !batch.latents_b) {
      throw std::invalid_argument("unbiased estimator needs a second independent batch");
    }
    r = advas_penalty_unbiased(spec, generator, adversary, batch.real, *batch.real_b, batch.latents,
                               *batch.latents_b, rng, config);
  } else {
    r = advas_penalty(spec, generator, adversary, batch.real, batch.latents, rng, config);
  }
  auto g_advas = flatten_values(gradient(r, theta));

  auto bundle = combine_gradients(std::move(g_orig), std::move(g_advas), config);
  bundle.l_gen = l_gen.value.value().item();
  bundle.r = r.value().item();
  return bundle;
}

}  // namespace advas
