#include "advas/objectives.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace advas {

std::string_view objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kNsGan: return "nsgan";
    case ObjectiveKind::kWgan: return "wgan";
    case ObjectiveKind::kWganGp: return "wgan-gp";
    case ObjectiveKind::kHinge: return "hinge";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  for (auto kind : {ObjectiveKind::kNsGan, ObjectiveKind::kWgan, ObjectiveKind::kWganGp, ObjectiveKind::kHinge}) {
    if (objective_name(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown objective kind '" + std::string(name) + "'");
}

void ObjectiveSpec::validate() const {
  if (!(gp_weight >= 0.0)) throw std::invalid_argument("gp_weight must be >= 0");
  if (!(hinge_margin > 0.0)) throw std::invalid_argument("hinge_margin must be > 0");
}

Var h_nsgan(const Network& adversary, const Var& real, const Var& fake) {
  const Var a_real = adversary(real);
  const Var a_fake = adversary(fake);
  const Var real_term = mean(log(clamp_min(a_real, kLogFloor)));
  const Var fake_term = mean(log(clamp_min(add_scalar(neg(a_fake), 1.0), kLogFloor)));
  return real_term + fake_term;
}

Var h_wgan(const Network& adversary, const Var& real, const Var& fake) {
  return mean(adversary(real)) - mean(adversary(fake));
}

Tensor hinge_truncate(const Tensor& outputs, bool is_real, double margin) {
  Tensor out = outputs;
  for (double& v : out.data()) v = is_real ? std::min(v, margin) : std::max(v, -margin);
  return out;
}

Var hinge_truncate(const Var& outputs, bool is_real, double margin) {
  return is_real ? clamp_max(outputs, margin) : clamp_min(outputs, -margin);
}

Var h_hinge_truncated(const Network& adversary, const Var& real, const Var& fake, double margin) {
  return mean(hinge_truncate(adversary(real), true, margin)) -
         mean(hinge_truncate(adversary(fake), false, margin));
}

Var gradient_penalty(const Network& adversary, const Var& real, const Var& fake, double weight, Rng& rng) {
  if (real.shape() != fake.shape()) {
    throw ShapeError("gradient_penalty: real " + shape_to_string(real.shape()) + " vs fake " +
                     shape_to_string(fake.shape()));
  }
  const std::size_t rows = real.shape()[0];
  Tensor u = Tensor::zeros({rows, 1});
  for (double& v : u.data()) v = rng.uniform();
  const Var mix = broadcast(Var::constant(u), real.shape());
  const Var one_minus = broadcast(Var::constant(Tensor::full({rows, 1}, 1.0)), real.shape()) - mix;
  Var interpolates = mix * real + one_minus * fake;
  // The input gradient is needed even when neither batch carries history.
  if (!interpolates.requires_grad()) interpolates = Var::leaf(interpolates.value());

  const Var outputs = adversary(interpolates);
  const Var input_grad = gradient(sum(outputs), std::span(&interpolates, 1), GradMode::kCreateGraph)[0];
  const Var norms = sqrt(add_scalar(sum_rows(square(input_grad)), kGradNormEps));
  return scale(mean(square(add_scalar(norms, -1.0))), weight);
}

Var objective_value(const ObjectiveSpec& spec, const Network& adversary, const Var& real, const Var& fake,
                    bool truncate) {
  switch (spec.kind) {
    case ObjectiveKind::kNsGan:
      return h_nsgan(adversary, real, fake);
    case ObjectiveKind::kWgan:
    case ObjectiveKind::kWganGp:
      return h_wgan(adversary, real, fake);
    case ObjectiveKind::kHinge:
      return truncate ? h_hinge_truncated(adversary, real, fake, spec.hinge_margin)
                      : h_wgan(adversary, real, fake);
  }
  throw std::logic_error("unhandled objective kind");
}

BatchLoss adversary_loss(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                         const Tensor& real, const Tensor& latents, Rng& rng, AdversaryLossOptions options) {
  const Var real_var = Var::constant(real);
  const Var fake = generator(Var::constant(latents));
  Var value = neg(objective_value(spec, adversary, real_var, fake, options.truncate));
  Var gamma = Var::scalar(0.0);
  if (spec.kind == ObjectiveKind::kWganGp && options.include_gamma) {
    gamma = gradient_penalty(adversary, real_var, fake, spec.gp_weight, rng);
    value = value + gamma;
  }
  return BatchLoss{value, gamma, real, fake};
}

BatchLoss generator_loss(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                         const Tensor& real, const Tensor& latents) {
  const Var fake = generator(Var::constant(latents));
  Var value = objective_value(spec, adversary, Var::constant(real), fake, false);
  return BatchLoss{value, Var::scalar(0.0), real, fake};
}

}  // namespace advas
