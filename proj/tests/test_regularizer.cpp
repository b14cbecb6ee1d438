#include <gtest/gtest.h>

#include <cmath>

#include "advas/regularizer.hpp"

using namespace advas;

namespace {

const Model kShift{[](std::span<const Var> p, const Var& z) { return z + broadcast(p[0], z.shape()); }, 1, 1};
const Model kLinear{[](std::span<const Var> p, const Var& x) { return matmul(x, p[0]); }, 1, 1};

Tensor column(std::initializer_list<double> v) { return Tensor({v.size(), 1}, std::vector<double>(v)); }

Tensor random_matrix(std::size_t n, std::size_t d, Rng& rng) {
  Tensor t = Tensor::zeros({n, d});
  for (auto& x : t.data()) x = rng.normal();
  return t;
}

ObjectiveSpec wgan() {
  ObjectiveSpec s;
  s.kind = ObjectiveKind::kWgan;
  return s;
}

MlpSpec small_mlp(std::size_t hidden) {
  MlpSpec s;
  s.hidden = {hidden};
  s.activation = Activation::kTanh;
  return s;
}

}  // namespace

TEST(LambdaHeuristic, Examples) {
  const std::vector<double> five{3.0, 4.0}, ten{6.0, 8.0}, one{0.6, 0.8}, zero{0.0, 0.0};
  EXPECT_EQ(lambda_heuristic(five, ten), 0.5);
  EXPECT_EQ(lambda_heuristic(five, one), 1.0);
  EXPECT_EQ(lambda_heuristic(five, zero), 1.0);
  EXPECT_EQ(lambda_heuristic(zero, zero), 1.0);
}

TEST(LambdaHeuristic, RangeAndBoundProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    std::vector<double> go(n), ga(n);
    const double so = std::exp(3 * rng.normal()), sa = std::exp(3 * rng.normal());
    for (auto& x : go) x = so * rng.normal();
    for (auto& x : ga) x = sa * rng.normal();
    const auto bundle = combine_gradients(go, ga, AdvasConfig{});
    EXPECT_GT(bundle.lambda_used, 0.0);
    EXPECT_LE(bundle.lambda_used, 1.0);
    EXPECT_LE(bundle.lambda_used * l2_norm(ga), l2_norm(go) * (1 + 1e-12));
  }
}

TEST(CombineGradients, TotalIdentity) {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> go(5), ga(5);
    for (auto& x : go) x = rng.normal();
    for (auto& x : ga) x = rng.normal() * 10;
    const AdvasConfig cfg = trial % 2 ? AdvasConfig{} : AdvasConfig::fixed(rng.uniform(0, 3));
    const auto b = combine_gradients(go, ga, cfg);
    for (std::size_t i = 0; i < 5; ++i) {
      const double expected = go[i] + b.lambda_used * ga[i];
      EXPECT_LE(std::abs(b.g_total[i] - expected), 1e-12 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(CombineGradients, FixedZeroIsOriginal) {
  const std::vector<double> go{1.5, -2.0}, ga{100.0, 3.0};
  EXPECT_EQ(combine_gradients(go, ga, AdvasConfig::fixed(0.0)).g_total, go);
}

TEST(CombineGradients, LengthMismatch) {
  EXPECT_THROW(combine_gradients({1.0}, {1.0, 2.0}, AdvasConfig{}), ShapeError);
}

TEST(AdvasConfig, NegativeLambdaRejected) {
  EXPECT_THROW(AdvasConfig::fixed(-0.1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(AdvasConfig::fixed(0.0).validate());
}

TEST(UnbiasedProduct, DotProduct) {
  const std::vector<double> x{1, 2}, xp{3, 4};
  EXPECT_EQ(unbiased_product(x, xp), 11.0);
}

TEST(AdvasPenalty, DiracWganIsThetaSquared) {
  Rng rng(0);
  const Network g(kShift, {Var::leaf(Tensor::vector({0.5}))});
  for (double phi : {-1.0, -0.3, 0.0, 0.7}) {
    const Network a(kLinear, {Var::leaf(Tensor::matrix(1, 1, {phi}))});
    const Var r = advas_penalty(wgan(), g, a, column({0.0, 0.0}), column({0.0, 0.0}), rng);
    EXPECT_NEAR(r.value().item(), 0.25, 1e-15);
  }
}

TEST(AdvasPenalty, MatchingDistributionsGiveZero) {
  Rng rng(1);
  const Model gm = mlp_model(small_mlp(4));
  for (int trial = 0; trial < 20; ++trial) {
    const Network g(kShift, {Var::leaf(Tensor::vector({0.0}))});
    const Network a(gm, bind(build_mlp(small_mlp(4), trial, Role::kAdversary), true));
    const Tensor batch = random_matrix(6, 1, rng);
    EXPECT_LE(advas_penalty(wgan(), g, a, batch, batch, rng).value().item(), 1e-30);
  }
}

TEST(AdvasPenalty, NonNegative) {
  Rng rng(2);
  ObjectiveSpec spec;  // wgan-gp
  const MlpSpec ms = small_mlp(3);
  const Model m = mlp_model(ms);
  for (int trial = 0; trial < 30; ++trial) {
    const Network g(m, bind(build_mlp(ms, trial, Role::kGenerator), true));
    const Network a(m, bind(build_mlp(ms, 50 + trial, Role::kAdversary), true));
    EXPECT_GE(advas_penalty(spec, g, a, random_matrix(4, 1, rng), random_matrix(4, 1, rng), rng).value().item(),
              0.0);
  }
}

TEST(AdvasPenaltyUnbiased, SameBatchReducesToBiased) {
  Rng rng(3);
  const MlpSpec ms = small_mlp(3);
  const Model m = mlp_model(ms);
  const Network g(m, bind(build_mlp(ms, 1, Role::kGenerator), true));
  const Network a(m, bind(build_mlp(ms, 2, Role::kAdversary), true));
  const Tensor real = random_matrix(5, 1, rng), lat = random_matrix(5, 1, rng);
  const double biased = advas_penalty(wgan(), g, a, real, lat, rng).value().item();
  const double product = advas_penalty_unbiased(wgan(), g, a, real, real, lat, lat, rng).value().item();
  EXPECT_NEAR(product, biased, 1e-14 * std::max(1.0, biased));
}

TEST(TotalGeneratorGradient, FixedZeroMatchesOriginal) {
  Rng rng(4);
  const MlpSpec ms = small_mlp(3);
  const Model m = mlp_model(ms);
  const Network g(m, bind(build_mlp(ms, 1, Role::kGenerator), true));
  const Network a(m, bind(build_mlp(ms, 2, Role::kAdversary), true));
  const GeneratorBatch batch{random_matrix(4, 1, rng), random_matrix(4, 1, rng), {}, {}};
  const auto b = total_generator_gradient(ObjectiveSpec{}, AdvasConfig::fixed(0.0), g, a, batch, rng);
  EXPECT_EQ(b.g_total, b.g_orig);
  EXPECT_EQ(b.lambda_used, 0.0);
}

TEST(TotalGeneratorGradient, UnbiasedNeedsSecondBatch) {
  Rng rng(4);
  const MlpSpec ms = small_mlp(3);
  const Model m = mlp_model(ms);
  const Network g(m, bind(build_mlp(ms, 1, Role::kGenerator), true));
  const Network a(m, bind(build_mlp(ms, 2, Role::kAdversary), true));
  AdvasConfig cfg;
  cfg.estimator = Estimator::kUnbiasedProduct;
  const GeneratorBatch batch{random_matrix(4, 1, rng), random_matrix(4, 1, rng), {}, {}};
  EXPECT_THROW(total_generator_gradient(ObjectiveSpec{}, cfg, g, a, batch, rng), std::invalid_argument);
}

// g_advas against central differences of r~ in theta, with batches and rng frozen.
TEST(TotalGeneratorGradient, AdvasGradientMatchesFiniteDifferences) {
  Rng data_rng(5);
  const MlpSpec ms = small_mlp(3);
  const Model m = mlp_model(ms);
  for (ObjectiveKind kind : {ObjectiveKind::kWgan, ObjectiveKind::kWganGp, ObjectiveKind::kHinge}) {
    ObjectiveSpec spec;
    spec.kind = kind;
    const ParamSet theta = build_mlp(ms, 7, Role::kGenerator);
    const ParamSet phi = build_mlp(ms, 8, Role::kAdversary);
    const GeneratorBatch batch{random_matrix(6, 1, data_rng), random_matrix(6, 1, data_rng), {}, {}};
    const Rng frozen(99);

    Rng rng = frozen;
    const Network g(m, bind(theta, true));
    const Network a(m, bind(phi, true));
    const auto bundle = total_generator_gradient(spec, AdvasConfig::fixed(1.0), g, a, batch, rng);

    const auto r_of = [&](std::span<const double> flat) {
      const ParamSet t = theta.unflatten(flat);
      Rng local = frozen;
      const Network gg(m, bind(t, false));
      const Network aa(m, bind(phi, true));
      return advas_penalty(spec, gg, aa, batch.real, batch.latents, local).value().item();
    };
    const auto flat = theta.flatten();
    const auto fd = finite_difference_gradient(r_of, flat, 1e-5);
    ASSERT_EQ(fd.size(), bundle.g_advas.size());
    for (std::size_t i = 0; i < fd.size(); ++i) {
      EXPECT_LE(std::abs(bundle.g_advas[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-3), 1e-3)
          << objective_name(kind) << " coordinate " << i;
    }
  }
}

// At the adversary's optimum grad_phi L_adv = 0, so the regularizer's gradient vanishes.
TEST(TotalGeneratorGradient, OptimumLeavesOriginalGradient) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kWganGp;
  spec.gp_weight = 10.0;
  const Tensor real = column({0.0, 0.0, 0.0});
  const Tensor latents = column({0.0, 0.0, 0.0});
  for (double theta : {0.5, -0.8, 1.3}) {
    const Network g(kShift, {Var::leaf(Tensor::vector({theta}))});
    const auto dphi = [&](double phi) {
      Rng rng(0);
      const Network a(kLinear, {Var::leaf(Tensor::matrix(1, 1, {phi}))});
      const auto loss = adversary_loss(spec, g, a, real, latents, rng);
      return gradient_values(loss.value, a.params())[0].item();
    };
    // L_adv is convex in phi > 0 here; bisect its derivative.
    double lo = 1e-3, hi = 5.0;
    ASSERT_LT(dphi(lo), 0.0);
    ASSERT_GT(dphi(hi), 0.0);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (dphi(mid) < 0 ? lo : hi) = mid;
    }
    const Network a(kLinear, {Var::leaf(Tensor::matrix(1, 1, {0.5 * (lo + hi)}))});
    Rng rng(0);
    const auto b = total_generator_gradient(spec, AdvasConfig{}, g, a, GeneratorBatch{real, latents, {}, {}}, rng);
    for (std::size_t i = 0; i < b.g_total.size(); ++i) EXPECT_NEAR(b.g_total[i], b.g_orig[i], 1e-6);
    EXPECT_LE(b.r, 1e-20);
  }
}
