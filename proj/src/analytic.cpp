#include "advas/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace advas::analytic {

namespace {

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

struct Bound {
  Var theta;
  Var phi;
  Var h;
};

Bound bind_game(const AnalyticGame& game, double theta, double phi) {
  Bound b{Var::leaf(Tensor::scalar(theta)), Var::leaf(Tensor::scalar(phi)), {}};
  b.h = game.h_expr(b.theta, b.phi);
  return b;
}

}  // namespace

AnalyticGame dirac_wgan_game() {
  AnalyticGame game;
  game.name = "dirac-wgan";
  game.h_expr = [](const Var& theta, const Var& phi) { return neg(mul(phi, theta)); };
  game.h = [](double theta, double phi) { return -phi * theta; };
  game.phi_star = [](double theta) { return -sign(theta); };
  game.envelope = [](double theta) { return std::abs(theta); };
  game.envelope_grad = [](double theta) { return sign(theta); };
  game.d1h = [](double, double phi) { return -phi; };
  game.d2h = [](double theta, double) { return -theta; };
  game.phi_bound = 1.0;
  game.nondifferentiable = {0.0};
  game.domain_notes = "theta real; |phi| <= 1 (1-Lipschitz linear adversaries); M not differentiable at 0";
  return game;
}

AnalyticGame smooth_quadratic_game(double c, double d) {
  AnalyticGame game;
  game.name = "smooth-quadratic";
  game.h_expr = [c, d](const Var& theta, const Var& phi) {
    return neg(square(phi - scale(theta, c))) + scale(square(theta), d);
  };
  game.h = [c, d](double theta, double phi) { return -(phi - c * theta) * (phi - c * theta) + d * theta * theta; };
  game.phi_star = [c](double theta) { return c * theta; };
  game.envelope = [d](double theta) { return d * theta * theta; };
  game.envelope_grad = [d](double theta) { return 2.0 * d * theta; };
  game.jacobian_f = [c](double) { return c; };
  game.d1h = [c, d](double theta, double phi) { return 2.0 * c * (phi - c * theta) + 2.0 * d * theta; };
  game.d2h = [c](double theta, double phi) { return -2.0 * (phi - c * theta); };
  game.domain_notes = "theta, phi unconstrained";
  return game;
}

double project_phi(const AnalyticGame& game, double phi) {
  if (game.phi_bound <= 0.0) return phi;
  return std::clamp(phi, -game.phi_bound, game.phi_bound);
}

Partials autodiff_partials(const AnalyticGame& game, double theta, double phi) {
  const auto b = bind_game(game, theta, phi);
  const Var wrt[] = {b.theta, b.phi};
  const auto grads = gradient_values(b.h, wrt);
  return Partials{grads[0].item(), grads[1].item()};
}

double advas_r(const AnalyticGame& game, double theta, double phi) {
  const auto b = bind_game(game, theta, phi);
  return squared_gradient_norm(neg(b.h), std::span(&b.phi, 1)).value().item();
}

VerificationReport verify_envelope(const AnalyticGame& game, std::span<const double> grid, double tolerance,
                                   double phi_offset) {
  VerificationReport report{"envelope:" + game.name, tolerance, true, 0.0, {}, {}};
  for (double theta : grid) {
    if (std::find(game.nondifferentiable.begin(), game.nondifferentiable.end(), theta) !=
        game.nondifferentiable.end()) {
      continue;
    }
    const double phi = game.phi_star(theta) + phi_offset;
    const double residual = std::abs(autodiff_partials(game, theta, phi).d1h - game.envelope_grad(theta));
    report.rows.push_back({theta, phi, residual});
    report.max_residual = std::max(report.max_residual, residual);
    if (!(residual <= tolerance)) report.violations.push_back({theta, phi, residual});
  }
  report.passed = report.violations.empty();
  return report;
}

VerificationReport verify_corollary(const AnalyticGame& game, std::span<const double> grid, double tolerance,
                                    double phi_offset) {
  if (!game.jacobian_f) throw std::invalid_argument(game.name + " has no smooth adversary constructor");
  VerificationReport report{"corollary:" + game.name, tolerance, true, 0.0, {}, {}};
  for (double theta : grid) {
    const double phi = game.phi_star(theta) + phi_offset;
    const double residual = std::abs(autodiff_partials(game, theta, phi).d2h * (*game.jacobian_f)(theta));
    report.rows.push_back({theta, phi, residual});
    report.max_residual = std::max(report.max_residual, residual);
    if (!(residual <= tolerance)) report.violations.push_back({theta, phi, residual});
  }
  report.passed = report.violations.empty();
  return report;
}

std::vector<GapRow> verify_gradient_optimality_gap(const AnalyticGame& game, double theta,
                                                   std::span<const double> phi_sequence) {
  std::vector<GapRow> rows;
  for (double phi : phi_sequence) {
    const auto partials = autodiff_partials(game, theta, phi);
    rows.push_back({phi, partials.d2h * partials.d2h, std::abs(partials.d1h - game.envelope_grad(theta))});
  }
  return rows;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  std::vector<double> grid;
  if (n == 1) return {lo};
  for (std::size_t i = 0; i < n; ++i) grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return grid;
}

std::vector<double> symmetric_grid(double lo, double hi, std::size_t n) {
  auto grid = linear_grid(lo, hi, n);
  const std::size_t half = grid.size();
  for (std::size_t i = 0; i < half; ++i) grid.push_back(-grid[i]);
  return grid;
}

Model constant_generator_model() {
  return Model{[](std::span<const Var> params, const Var& z) { return broadcast(params[0], {z.shape()[0], 1}); }, 1, 1};
}

Model linear_adversary_model() {
  return Model{[](std::span<const Var> params, const Var& x) { return matmul(x, params[0]); }, 1, 1};
}

Players dirac_wgan_players(double theta0, double phi0) {
  ParamSet theta(Role::kGenerator);
  theta.add("offset", Tensor({1}, {theta0}));
  ParamSet phi(Role::kAdversary);
  phi.add("slope", Tensor({1, 1}, {phi0}));
  return Players{constant_generator_model(), linear_adversary_model(), std::move(theta), std::move(phi)};
}

std::vector<double> teacher_forced_trajectory(const AnalyticGame& game, double theta0, std::size_t steps,
                                              double lr, const std::optional<AdvasConfig>& advas) {
  std::vector<double> trajectory{theta0};
  double theta = theta0;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto b = bind_game(game, theta, game.phi_star(theta));
    const auto g_orig = flatten_values(gradient(b.h, std::span(&b.theta, 1)));
    double step = g_orig[0];
    if (advas) {
      const Var r = squared_gradient_norm(neg(b.h), std::span(&b.phi, 1));
      const auto g_advas = flatten_values(gradient(r, std::span(&b.theta, 1)));
      step = combine_gradients(g_orig, g_advas, *advas).g_total[0];
    }
    theta -= lr * step;
    trajectory.push_back(theta);
  }
  return trajectory;
}

}  // namespace advas::analytic
