#include <gtest/gtest.h>

#include <cmath>

#include "advas/analytic.hpp"

using namespace advas;
using namespace advas::analytic;

TEST(DiracWgan, ClosedForms) {
  const auto game = dirac_wgan_game();
  EXPECT_EQ(game.phi_star(0.5), -1.0);
  EXPECT_EQ(game.phi_star(-0.5), 1.0);
  EXPECT_EQ(game.envelope(0.5), 0.5);
  EXPECT_EQ(game.envelope(0.0), 0.0);
  EXPECT_EQ(game.d1h(0.5, game.phi_star(0.5)), 1.0);
  EXPECT_EQ(game.envelope_grad(0.5), 1.0);
}

TEST(DiracWgan, RIndependentOfPhi) {
  const auto game = dirac_wgan_game();
  for (double phi : {-1.0, -0.25, 0.0, 0.6, 1.0}) {
    EXPECT_NEAR(advas_r(game, 0.5, phi), 0.25, 1e-15);
    EXPECT_EQ(advas_r(game, 0.0, phi), 0.0);
  }
}

TEST(DiracWgan, ProjectionBoundsPhi) {
  const auto game = dirac_wgan_game();
  EXPECT_EQ(project_phi(game, 3.0), 1.0);
  EXPECT_EQ(project_phi(game, -3.0), -1.0);
  EXPECT_EQ(project_phi(game, 0.4), 0.4);
  EXPECT_EQ(project_phi(smooth_quadratic_game(), 30.0), 30.0);
}

// r through the regularizer on trained-network parameterisation of the game.
TEST(DiracWgan, NetworkPenaltyIsThetaSquared) {
  Rng rng(12);
  const Players pl = dirac_wgan_players(0.0, 0.0);
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kWgan;
  const Tensor real = Tensor::zeros({4, 1});
  const Tensor latents = Tensor::zeros({4, 1});
  for (int i = 0; i < 20; ++i) {
    const double theta = rng.uniform(-2, 2), phi = rng.uniform(-1, 1);
    ParamSet t = pl.theta.unflatten(std::vector<double>{theta});
    ParamSet p = pl.phi.unflatten(std::vector<double>{phi});
    const Network g(pl.generator, bind(t, true));
    const Network a(pl.adversary, bind(p, true));
    EXPECT_NEAR(advas_penalty(spec, g, a, real, latents, rng).value().item(), theta * theta, 1e-10);
  }
}

TEST(SmoothQuadratic, Examples) {
  const auto game = smooth_quadratic_game(2.0, 1.0);
  EXPECT_NEAR(game.phi_star(0.3), 0.6, 1e-15);
  EXPECT_NEAR(game.d2h(0.3, 0.6), 0.0, 1e-15);
  EXPECT_NEAR(game.envelope_grad(0.3), 0.6, 1e-15);
  EXPECT_NEAR(game.d1h(0.3, 0.6), 0.6, 1e-15);
  EXPECT_EQ(game.h(0.0, game.phi_star(0.0)), 0.0);
  EXPECT_EQ(game.envelope(0.0), 0.0);
  EXPECT_EQ(advas_r(game, 0.0, 0.0), 0.0);
}

TEST(Games, EnvelopeValueMatchesH) {
  for (const auto& game : {dirac_wgan_game(), smooth_quadratic_game(), smooth_quadratic_game(-1.5, 0.3)}) {
    for (double theta : linear_grid(-2, 2, 101)) {
      EXPECT_NEAR(game.h(theta, game.phi_star(theta)), game.envelope(theta), 1e-10) << game.name;
    }
  }
}

// Closed-form partials against finite differences of h, and autodiff against closed forms.
TEST(Games, AutodiffPartialsMatchClosedForms) {
  Rng rng(3);
  for (const auto& game : {dirac_wgan_game(), smooth_quadratic_game(), smooth_quadratic_game(0.7, -2.0)}) {
    for (int i = 0; i < 50; ++i) {
      const double theta = rng.uniform(-2, 2), phi = rng.uniform(-1, 1);
      const auto p = autodiff_partials(game, theta, phi);
      EXPECT_NEAR(p.d1h, game.d1h(theta, phi), 1e-8);
      EXPECT_NEAR(p.d2h, game.d2h(theta, phi), 1e-8);
      const double h = 1e-6;
      EXPECT_NEAR(game.d1h(theta, phi), (game.h(theta + h, phi) - game.h(theta - h, phi)) / (2 * h), 1e-6);
      EXPECT_NEAR(game.d2h(theta, phi), (game.h(theta, phi + h) - game.h(theta, phi - h)) / (2 * h), 1e-6);
    }
  }
}

TEST(Games, EnvelopeGradientMatchesFiniteDifference) {
  for (const auto& game : {dirac_wgan_game(), smooth_quadratic_game()}) {
    for (double theta : symmetric_grid(0.1, 2.0, 20)) {
      const double h = 1e-6;
      EXPECT_NEAR(game.envelope_grad(theta), (game.envelope(theta + h) - game.envelope(theta - h)) / (2 * h), 1e-6);
    }
  }
}

TEST(Grids, Shapes) {
  const auto g = linear_grid(0.0, 1.0, 5);
  EXPECT_EQ(g, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  const auto s = symmetric_grid(0.1, 2.0, 20);
  EXPECT_EQ(s.size(), 40u);
  for (double x : s) EXPECT_GE(std::abs(x), 0.1);
}

TEST(VerifyEnvelope, PassesOnBothGames) {
  const auto grid = symmetric_grid(0.1, 2.0, 20);
  const auto dirac = verify_envelope(dirac_wgan_game(), grid, 1e-8);
  EXPECT_TRUE(dirac.passed);
  EXPECT_EQ(dirac.rows.size(), 40u);
  EXPECT_LE(dirac.max_residual, 1e-8);
  const auto smooth = verify_envelope(smooth_quadratic_game(), linear_grid(-2, 2, 41), 1e-8);
  EXPECT_TRUE(smooth.passed);
}

TEST(VerifyEnvelope, SkipsNondifferentiablePoint) {
  const std::vector<double> grid{-1.0, 0.0, 1.0};
  const auto report = verify_envelope(dirac_wgan_game(), grid, 1e-8);
  EXPECT_EQ(report.rows.size(), 2u);
}

TEST(VerifyEnvelope, PerturbedPhiShowsGap) {
  const auto report = verify_envelope(smooth_quadratic_game(), linear_grid(-1, 1, 11), 1e-8, 0.1);
  EXPECT_FALSE(report.passed);
  // D1h - grad M = 2c * offset.
  EXPECT_NEAR(report.max_residual, 0.4, 1e-12);
  EXPECT_EQ(report.violations.size(), 11u);
}

TEST(VerifyCorollary, Examples) {
  const auto grid = linear_grid(-2, 2, 41);
  const auto exact = verify_corollary(smooth_quadratic_game(), grid, 1e-10);
  EXPECT_TRUE(exact.passed);
  EXPECT_EQ(exact.max_residual, 0.0);
  const auto off = verify_corollary(smooth_quadratic_game(2.0, 1.0), grid, 1e-10, 0.05);
  EXPECT_FALSE(off.passed);
  EXPECT_NEAR(off.max_residual, 2 * 0.05 * 2.0, 1e-12);  // |D2h| = 2 * 0.05, times J = c
  const auto flat = verify_corollary(smooth_quadratic_game(0.0, 1.0), grid, 1e-10, 0.3);
  EXPECT_TRUE(flat.passed);
}

TEST(VerifyCorollary, RequiresJacobian) {
  EXPECT_THROW(verify_corollary(dirac_wgan_game(), linear_grid(0.1, 1, 3), 1e-10), std::invalid_argument);
}

TEST(OptimalityGap, SmoothConvergesToZero) {
  const auto game = smooth_quadratic_game();
  const double theta = 0.4;
  std::vector<double> phis;
  for (int k = 0; k < 10; ++k) phis.push_back(game.phi_star(theta) + std::pow(0.5, k));
  const auto rows = verify_gradient_optimality_gap(game, theta, phis);
  ASSERT_EQ(rows.size(), phis.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].r, rows[i - 1].r);
    EXPECT_LT(rows[i].gradient_gap, rows[i - 1].gradient_gap);
  }
  const auto at = verify_gradient_optimality_gap(game, theta, std::vector<double>{game.phi_star(theta)});
  EXPECT_NEAR(at[0].r, 0.0, 1e-20);
  EXPECT_NEAR(at[0].gradient_gap, 0.0, 1e-12);
}

TEST(OptimalityGap, ConstantPhiGivesConstantColumns) {
  const auto game = smooth_quadratic_game();
  const std::vector<double> phis(5, 2.0);
  const auto rows = verify_gradient_optimality_gap(game, 0.4, phis);
  for (const auto& row : rows) {
    EXPECT_EQ(row.r, rows[0].r);
    EXPECT_EQ(row.gradient_gap, rows[0].gradient_gap);
    EXPECT_GT(row.r, 0.0);
  }
}

TEST(OptimalityGap, DiracRStaysConstant) {
  const auto game = dirac_wgan_game();
  const std::vector<double> phis{0.0, -0.5, -0.9, -0.99, -1.0};
  const auto rows = verify_gradient_optimality_gap(game, 0.5, phis);
  for (const auto& row : rows) EXPECT_NEAR(row.r, 0.25, 1e-15);
  EXPECT_NEAR(rows.back().gradient_gap, 0.0, 1e-15);
}

TEST(TeacherForced, AdvasPreservesTrajectory) {
  const auto game = smooth_quadratic_game();
  const auto off = teacher_forced_trajectory(game, 1.3, 200, 0.01, std::nullopt);
  const auto on = teacher_forced_trajectory(game, 1.3, 200, 0.01, AdvasConfig{});
  const auto fixed = teacher_forced_trajectory(game, 1.3, 200, 0.01, AdvasConfig::fixed(5.0));
  ASSERT_EQ(off.size(), 201u);
  for (std::size_t k = 0; k < off.size(); ++k) {
    EXPECT_NEAR(on[k], off[k], 1e-6);
    EXPECT_NEAR(fixed[k], off[k], 1e-6);
  }
  // Gradient descent on M = theta^2 from the closed form.
  EXPECT_NEAR(off.back(), 1.3 * std::pow(1 - 0.02, 200), 1e-12);
}
