#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "advas/objectives.hpp"

using namespace advas;

namespace {

// a(x) = w x + b on 1D inputs.
const Model kAffine1d{[](std::span<const Var> p, const Var& x) { return affine(x, p[0], p[1]); }, 1, 1};

std::vector<Var> affine_params(double w, double b) {
  return {Var::leaf(Tensor::matrix(1, 1, {w})), Var::leaf(Tensor::vector({b}))};
}

// Generator x = z + shift.
const Model kShift{[](std::span<const Var> p, const Var& z) { return z + broadcast(p[0], z.shape()); }, 1, 1};

Tensor column(std::initializer_list<double> v) { return Tensor({v.size(), 1}, std::vector<double>(v)); }

Tensor random_column(std::size_t n, Rng& rng) {
  Tensor t = Tensor::zeros({n, 1});
  for (auto& x : t.data()) x = rng.normal();
  return t;
}

Model sigmoid_model() {
  MlpSpec s;
  s.final_activation = FinalActivation::kSigmoid;
  return mlp_model(s);
}

}  // namespace

TEST(ObjectiveSpec, Validation) {
  ObjectiveSpec s;
  s.gp_weight = -1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_EQ(parse_objective_kind("wgan-gp"), ObjectiveKind::kWganGp);
  EXPECT_EQ(objective_name(ObjectiveKind::kHinge), "hinge");
  EXPECT_THROW(parse_objective_kind("lsgan"), std::invalid_argument);
}

TEST(HNsgan, ConstantHalfGivesMinusLog4) {
  const Model model = sigmoid_model();
  const Network a(model, affine_params(0.0, 0.0));
  const Var real = Var::constant(column({1.0, -2.0, 0.3}));
  const Var fake = Var::constant(column({0.5, 4.0, -1.0}));
  EXPECT_NEAR(h_nsgan(a, real, fake).value().item(), -std::log(4.0), 1e-12);
}

TEST(HNsgan, PerfectAdversaryApproachesZero) {
  const Model model = sigmoid_model();
  // Growing slope pushes a(real=+1) -> 1 and a(fake=-1) -> 0.
  double prev = -INFINITY;
  for (double w : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const Network a(model, affine_params(w, 0.0));
    const double h = h_nsgan(a, Var::constant(column({1.0, 1.0})), Var::constant(column({-1.0}))).value().item();
    EXPECT_LT(h, 0.0);
    EXPECT_GT(h, prev);
    prev = h;
  }
  EXPECT_GT(prev, -1e-6);
}

TEST(HNsgan, SameBatchAtMostMinusLog4) {
  Rng rng(11);
  const Model model = sigmoid_model();
  for (int trial = 0; trial < 50; ++trial) {
    const Network a(model, affine_params(rng.normal() * 3, rng.normal()));
    const Tensor batch = random_column(16, rng);
    const Var b = Var::constant(batch);
    const double h = h_nsgan(a, b, b).value().item();
    // Oracle: log a + log(1 - a) <= -log 4 pointwise, by AM-GM.
    double oracle = 0.0;
    const Tensor out = a(b).value();
    for (double v : out.data()) {
      EXPECT_LE(std::log(v) + std::log(1 - v), -std::log(4.0) + 1e-12);
      oracle += std::log(std::max(v, kLogFloor)) + std::log(std::max(1 - v, kLogFloor));
    }
    EXPECT_NEAR(h, oracle / 16, 1e-12);
    EXPECT_LE(h, -std::log(4.0) + 1e-12);
  }
}

TEST(HNsgan, LogFloorKeepsFinite) {
  const Model model = sigmoid_model();
  const Network a(model, affine_params(1e4, 0.0));
  const double h = h_nsgan(a, Var::constant(column({-1.0})), Var::constant(column({1.0}))).value().item();
  EXPECT_NEAR(h, 2 * std::log(kLogFloor), 1e-9);
}

TEST(HWgan, Examples) {
  const Network identity(kAffine1d, affine_params(1.0, 0.0));
  EXPECT_NEAR(h_wgan(identity, Var::constant(column({0.5, 1.5})), Var::constant(column({-1.0, 1.0}))).value().item(),
              1.0, 1e-15);
  const Network constant(kAffine1d, affine_params(0.0, 3.0));
  EXPECT_EQ(h_wgan(constant, Var::constant(column({0.5, 1.5})), Var::constant(column({-1.0, 7.0}))).value().item(),
            0.0);
}

TEST(HWgan, SameBatchIsExactlyZero) {
  Rng rng(2);
  MlpSpec spec;
  spec.hidden = {5, 5};
  const Model model = mlp_model(spec);
  for (int trial = 0; trial < 30; ++trial) {
    const ParamSet phi = build_mlp(spec, trial, Role::kAdversary);
    const Network a(model, bind(phi, true));
    const Var b = Var::constant(random_column(1 + rng.uniform_index(20), rng));
    EXPECT_EQ(h_wgan(a, b, b).value().item(), 0.0);
  }
}

TEST(HHinge, TruncatesOutputs) {
  const Network identity(kAffine1d, affine_params(1.0, 0.0));
  // min(3, 1) = 1 on real, max(-5, -1) = -1 on fake -> h = 1 - (-1) = 2.
  EXPECT_EQ(h_hinge_truncated(identity, Var::constant(column({3.0})), Var::constant(column({-5.0}))).value().item(),
            2.0);
}

TEST(GradientPenalty, Examples) {
  Rng rng(0);
  const Var real = Var::constant(column({1.0, -0.5, 2.0}));
  const Var fake = Var::constant(column({0.0, 0.7, -3.0}));
  const Network slope1(kAffine1d, affine_params(1.0, 0.3));
  const Network slope2(kAffine1d, affine_params(2.0, 0.0));
  const Network flat(kAffine1d, affine_params(0.0, 4.0));
  EXPECT_NEAR(gradient_penalty(slope1, real, fake, 10.0, rng).value().item(), 0.0, 1e-10);
  EXPECT_NEAR(gradient_penalty(slope2, real, fake, 10.0, rng).value().item(), 10.0, 1e-10);
  // sqrt(0 + 1e-12) = 1e-6, so (1e-6 - 1)^2 scaled by the weight.
  EXPECT_NEAR(gradient_penalty(flat, real, fake, 10.0, rng).value().item(), 10.0 * std::pow(1 - 1e-6, 2), 1e-12);
}

TEST(GradientPenalty, NonNegative) {
  Rng rng(4);
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden = {6};
  spec.activation = Activation::kTanh;
  const Model model = mlp_model(spec);
  for (int trial = 0; trial < 30; ++trial) {
    const Network a(model, bind(build_mlp(spec, trial, Role::kAdversary), true));
    Tensor r = Tensor::zeros({4, 2}), f = Tensor::zeros({4, 2});
    for (auto& x : r.data()) x = rng.normal();
    for (auto& x : f.data()) x = rng.normal();
    EXPECT_GE(gradient_penalty(a, Var::constant(r), Var::constant(f), 10.0, rng).value().item(), 0.0);
  }
}

TEST(GradientPenalty, ShapeMismatch) {
  Rng rng(0);
  const Network a(kAffine1d, affine_params(1.0, 0.0));
  EXPECT_THROW(gradient_penalty(a, Var::constant(column({1, 2})), Var::constant(column({1})), 1.0, rng), ShapeError);
}

TEST(HingeTruncate, Examples) {
  EXPECT_EQ(hinge_truncate(Tensor::scalar(2.0), true).item(), 1.0);
  EXPECT_EQ(hinge_truncate(Tensor::scalar(-3.0), false).item(), -1.0);
  EXPECT_EQ(hinge_truncate(Tensor::scalar(0.5), true).item(), 0.5);
}

TEST(HingeTruncate, IdempotentAndLipschitz) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * 3, y = rng.normal() * 3;
    const bool is_real = i % 2 == 0;
    const double tx = hinge_truncate(Tensor::scalar(x), is_real).item();
    const double ty = hinge_truncate(Tensor::scalar(y), is_real).item();
    EXPECT_EQ(hinge_truncate(Tensor::scalar(tx), is_real).item(), tx);
    EXPECT_LE(std::abs(tx - ty), std::abs(x - y));
  }
}

TEST(AdversaryLoss, WganSameBatchIsZero) {
  Rng rng(0);
  const Network g(kShift, {Var::leaf(Tensor::vector({0.0}))});
  const Network a(kAffine1d, affine_params(1.7, 0.2));
  const Tensor batch = column({0.3, -1.2, 2.0});
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kWgan;
  EXPECT_EQ(adversary_loss(spec, g, a, batch, batch, rng).value.value().item(), 0.0);
}

TEST(AdversaryLoss, NsganConstantIsLog4) {
  Rng rng(0);
  const Model model = sigmoid_model();
  const Network g(kShift, {Var::leaf(Tensor::vector({0.0}))});
  const Network a(model, affine_params(0.0, 0.0));
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kNsGan;
  EXPECT_NEAR(adversary_loss(spec, g, a, column({1, 2}), column({0, 5}), rng).value.value().item(),
              std::log(4.0), 1e-12);
}

TEST(AdversaryLoss, GpIsAdditive) {
  const Network g(kShift, {Var::leaf(Tensor::vector({0.5}))});
  const Network a(kAffine1d, affine_params(2.0, 0.0));
  const Tensor real = column({1.0, 0.0}), latents = column({0.0, -1.0});
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kWganGp;
  spec.gp_weight = 10.0;
  Rng r1(3);
  const BatchLoss loss = adversary_loss(spec, g, a, real, latents, r1);
  EXPECT_NEAR(loss.gamma.value().item(), 10.0, 1e-10);
  ObjectiveSpec plain = spec;
  plain.kind = ObjectiveKind::kWgan;
  Rng r2(3);
  const double without = adversary_loss(plain, g, a, real, latents, r2).value.value().item();
  EXPECT_NEAR(loss.value.value().item(), without + loss.gamma.value().item(), 1e-12);
  AdversaryLossOptions no_gamma;
  no_gamma.include_gamma = false;
  Rng r3(3);
  EXPECT_EQ(adversary_loss(spec, g, a, real, latents, r3, no_gamma).value.value().item(), without);
}

TEST(GeneratorLoss, WganHandExample) {
  const Network g(kShift, {Var::leaf(Tensor::vector({0.3}))});
  const Network a(kAffine1d, affine_params(1.0, 0.0));
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kWgan;
  // real mean 0, fake mean 0.3 -> h = 0 - 0.3.
  const BatchLoss loss = generator_loss(spec, g, a, column({-1.0, 1.0}), column({0.0, 0.0}));
  EXPECT_NEAR(loss.value.value().item(), -0.3, 1e-15);
}

TEST(GeneratorLoss, NsganConstant) {
  const Model model = sigmoid_model();
  const Network g(kShift, {Var::leaf(Tensor::vector({0.0}))});
  const Network a(model, affine_params(0.0, 0.0));
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kNsGan;
  EXPECT_NEAR(generator_loss(spec, g, a, column({1}), column({2})).value.value().item(), -std::log(4.0), 1e-12);
}

TEST(GeneratorLoss, HingeSeesUntruncatedOutputs) {
  const Network g(kShift, {Var::leaf(Tensor::vector({0.0}))});
  const Network a(kAffine1d, affine_params(1.0, 0.0));
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kHinge;
  const Tensor real = column({3.0}), latents = column({-5.0});
  // Untruncated: 3 - (-5) = 8; the adversary side sees 1 - (-1) = 2.
  EXPECT_EQ(generator_loss(spec, g, a, real, latents).value.value().item(), 8.0);
  Rng rng(0);
  EXPECT_EQ(adversary_loss(spec, g, a, real, latents, rng).value.value().item(), -2.0);
  // The generator gradient flows through the fake output even past the margin.
  const BatchLoss loss = generator_loss(spec, g, a, real, latents);
  const auto grads = gradient_values(loss.value, g.params());
  EXPECT_EQ(grads[0][0], -1.0);
}

TEST(ZeroSum, GeneratorIsMinusAdversary) {
  Rng rng(21);
  MlpSpec gs;
  gs.hidden = {4};
  MlpSpec as = gs;
  as.activation = Activation::kTanh;
  const Model gm = mlp_model(gs);
  for (ObjectiveKind kind : {ObjectiveKind::kNsGan, ObjectiveKind::kWgan}) {
    ObjectiveSpec spec;
    spec.kind = kind;
    MlpSpec as_k = as;
    if (kind == ObjectiveKind::kNsGan) as_k.final_activation = FinalActivation::kSigmoid;
    const Model am = mlp_model(as_k);
    for (int trial = 0; trial < 20; ++trial) {
      const Network g(gm, bind(build_mlp(gs, trial, Role::kGenerator), true));
      const Network a(am, bind(build_mlp(as_k, 100 + trial, Role::kAdversary), true));
      const Tensor real = random_column(8, rng), latents = random_column(8, rng);
      const BatchLoss adv = adversary_loss(spec, g, a, real, latents, rng);
      const double lg = generator_loss(spec, g, a, real, latents).value.value().item();
      const double expected = -(adv.value.value().item() - adv.gamma.value().item());
      EXPECT_LE(std::abs(lg - expected), 1e-10 * std::max(1.0, std::abs(expected)));
    }
  }
}
