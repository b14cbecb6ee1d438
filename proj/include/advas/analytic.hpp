#pragma once

// Minimax games with closed-form optimal adversaries.
//
// Each game is a scalar h(theta, phi) together with its adversary constructor
// f(theta), envelope value M(theta) = h(theta, f(theta)) and derivatives. The
// verification routines compare autodiff partials of the game's expression
// against these closed forms.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advas/autodiff.hpp"
#include "advas/regularizer.hpp"
#include "advas/trainer.hpp"

namespace advas::analytic {

using ScalarMap = std::function<double(double)>;
using ScalarGame = std::function<double(double theta, double phi)>;
using GameExpression = std::function<Var(const Var& theta, const Var& phi)>;

struct AnalyticGame {
  std::string name;
  GameExpression h_expr;
  ScalarGame h;
  ScalarMap phi_star;  // adversary constructor f
  ScalarMap envelope;  // M
  ScalarMap envelope_grad;
  std::optional<ScalarMap> jacobian_f;  // only for smooth f
  ScalarGame d1h;
  ScalarGame d2h;
  double phi_bound = 0.0;  // |phi| <= phi_bound, 0 when unconstrained
  std::vector<double> nondifferentiable;  // theta values excluded from envelope checks
  std::string domain_notes;
};

/// p_true = delta_0, generator output theta, adversary a(x) = phi x with |phi| <= 1.
/// h = -phi theta, f = -sign(theta), M = |theta|, r = theta^2 for every phi.
AnalyticGame dirac_wgan_game();

/// h = -(phi - c theta)^2 + d theta^2, f = c theta, M = d theta^2.
AnalyticGame smooth_quadratic_game(double c = 2.0, double d = 1.0);

/// Projection onto the game's admissible adversary set.
double project_phi(const AnalyticGame& game, double phi);

struct Partials {
  double d1h = 0.0;
  double d2h = 0.0;
};

/// D1 h and D2 h by reverse-mode differentiation of the game expression.
Partials autodiff_partials(const AnalyticGame& game, double theta, double phi);

/// |grad_phi L_adv|^2 with L_adv = -h, through the autodiff graph.
double advas_r(const AnalyticGame& game, double theta, double phi);

struct ResidualRow {
  double theta = 0.0;
  double phi = 0.0;
  double residual = 0.0;
};

struct VerificationReport {
  std::string check;
  double tolerance = 0.0;
  bool passed = true;
  double max_residual = 0.0;
  std::vector<ResidualRow> rows;
  std::vector<ResidualRow> violations;
};

/// |D1 h(theta, f(theta) + phi_offset) - grad M(theta)| over the grid,
/// skipping the game's non-differentiable points.
VerificationReport verify_envelope(const AnalyticGame& game, std::span<const double> grid, double tolerance,
                                   double phi_offset = 0.0);

/// |D2 h(theta, f(theta) + phi_offset) * J_f(theta)| over the grid.
VerificationReport verify_corollary(const AnalyticGame& game, std::span<const double> grid, double tolerance,
                                    double phi_offset = 0.0);

struct GapRow {
  double phi = 0.0;
  double r = 0.0;
  double gradient_gap = 0.0;  // |D1 h - grad M|
};

std::vector<GapRow> verify_gradient_optimality_gap(const AnalyticGame& game, double theta,
                                                   std::span<const double> phi_sequence);

/// n evenly spaced values in [lo, hi].
std::vector<double> linear_grid(double lo, double hi, std::size_t n);
/// n points in [lo, hi] and their negatives.
std::vector<double> symmetric_grid(double lo, double hi, std::size_t n);

/// Generator whose output is its single parameter for every latent row.
Model constant_generator_model();
/// a(x) = x * phi for 1D inputs, phi of shape (1, 1).
Model linear_adversary_model();
Players dirac_wgan_players(double theta0, double phi0);

/// Generator descent on the game with phi reset to f(theta) before every step.
/// With `advas` set, steps follow g_orig + lambda * grad_theta r.
std::vector<double> teacher_forced_trajectory(const AnalyticGame& game, double theta0, std::size_t steps,
                                              double lr, const std::optional<AdvasConfig>& advas);

}  // namespace advas::analytic
