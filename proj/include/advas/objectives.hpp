#pragma once

#include <string>
#include <string_view>

#include "advas/autodiff.hpp"
#include "advas/nets.hpp"
#include "advas/rng.hpp"

namespace advas {

enum class ObjectiveKind { kNsGan, kWgan, kWganGp, kHinge };

std::string_view objective_name(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(std::string_view name);

/// The two-player objective h and the adversary-side penalty.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kWganGp;
  double gp_weight = 10.0;  // wgan-gp only
  double hinge_margin = 1.0;

  void validate() const;

  friend bool operator==(const ObjectiveSpec&, const ObjectiveSpec&) = default;
};

/// Floor applied inside both logarithms of the non-saturating objective.
inline constexpr double kLogFloor = 1e-7;
/// Added under the square root of the per-sample input-gradient norm.
inline constexpr double kGradNormEps = 1e-12;

/// E_real[log a] + E_fake[log(1 - a)], each log argument floored at kLogFloor.
Var h_nsgan(const Network& adversary, const Var& real, const Var& fake);
/// E_real[a] - E_fake[a].
Var h_wgan(const Network& adversary, const Var& real, const Var& fake);
/// E_real[min(a, m)] - E_fake[max(a, -m)].
Var h_hinge_truncated(const Network& adversary, const Var& real, const Var& fake, double margin = 1.0);

/// weight * mean_i (|grad_x a(x_i)| - 1)^2 over x_i = u_i real_i + (1 - u_i) fake_i, u_i ~ U(0, 1).
Var gradient_penalty(const Network& adversary, const Var& real, const Var& fake, double weight, Rng& rng);

Tensor hinge_truncate(const Tensor& outputs, bool is_real, double margin = 1.0);
Var hinge_truncate(const Var& outputs, bool is_real, double margin = 1.0);

/// h evaluated for `spec`; `truncate` applies hinge truncation (hinge kind only).
Var objective_value(const ObjectiveSpec& spec, const Network& adversary, const Var& real, const Var& fake,
                    bool truncate);

struct BatchLoss {
  Var value;
  Var gamma;  // adversary-side penalty included in value (zero when absent)
  Tensor real;
  Var fake;
};

struct AdversaryLossOptions {
  bool truncate = true;
  bool include_gamma = true;
};

/// L_adv = -h + gamma_adv, with fakes generated from `latents`.
BatchLoss adversary_loss(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                         const Tensor& real, const Tensor& latents, Rng& rng,
                         AdversaryLossOptions options = {});

/// L_gen = h on fresh fakes, without truncation and without gamma_adv.
BatchLoss generator_loss(const ObjectiveSpec& spec, const Network& generator, const Network& adversary,
                         const Tensor& real, const Tensor& latents);

}  // namespace advas
