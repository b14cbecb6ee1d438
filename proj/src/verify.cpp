#include "advas/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "advas/analytic.hpp"
#include "advas/evalkit.hpp"
#include "advas/nets.hpp"
#include "advas/objectives.hpp"
#include "advas/regularizer.hpp"
#include "advas/trainer.hpp"

namespace advas::verify {

namespace {

using UnaryOp = Var (*)(const Var&);

struct NamedUnary {
  const char* name;
  UnaryOp op;
};

// Shape-preserving transforms drawn by the random graph builder.
const NamedUnary kUnaryPool[] = {
    {"tanh", [](const Var& x) { return tanh(x); }},
    {"sigmoid", [](const Var& x) { return sigmoid(x); }},
    {"relu", [](const Var& x) { return relu(x); }},
    {"leaky-relu", [](const Var& x) { return leaky_relu(x, 0.2); }},
    {"half-square", [](const Var& x) { return scale(square(x), 0.5); }},
    {"log1p-square", [](const Var& x) { return log(add_scalar(square(x), 1.0)); }},
    {"sqrt1p-square", [](const Var& x) { return sqrt(add_scalar(square(x), 1.0)); }},
    {"rational", [](const Var& x) { return div(x, add_scalar(square(x), 1.0)); }},
    {"clamp-min", [](const Var& x) { return clamp_min(x, -0.3); }},
    {"clamp-max", [](const Var& x) { return clamp_max(x, 0.3); }},
    {"neg-shift", [](const Var& x) { return add_scalar(neg(x), 0.3); }},
    {"double-transpose", [](const Var& x) { return transpose(transpose(x)); }},
    {"reshape-roundtrip", [](const Var& x) { return reshape(reshape(x, {x.numel()}), x.shape()); }},
    {"self-product", [](const Var& x) { return mul(x, tanh(x)); }},
};

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.uniform_index(hi - lo + 1); }

std::size_t total_numel(std::span<const Shape> shapes) {
  std::size_t n = 0;
  for (const auto& s : shapes) n += shape_numel(s);
  return n;
}

double comparison_error(double analytic, double fd, double floor) {
  return std::abs(analytic - fd) / std::max(std::abs(fd), floor);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

Tensor gather_rows(const Tensor& population, std::span<const std::size_t> idx) {
  const std::size_t cols = population.cols();
  Tensor out = Tensor::zeros({idx.size(), cols});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t c = 0; c < cols; ++c) out.data()[i * cols + c] = population.at(idx[i], c);
  }
  return out;
}

Tensor resample(const Tensor& population, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(m);
  for (auto& i : idx) i = rng.uniform_index(population.rows());
  return gather_rows(population, idx);
}

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

Moments moments(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

SuiteResult gradient_suite() {
  SuiteResult res{"gradient", true, "", {"graph", "order", "params", "max_rel_error"}, {}, 0.0};
  Rng rng = Rng(0x6AD1E47).split("gradient-suite");
  double worst1 = 0.0, worst2 = 0.0;
  for (int g = 0; g < 100; ++g) {
    const RandomGraph graph = random_graph(rng);
    const double params = static_cast<double>(graph.x0.size() + graph.y0.size());
    const auto first = check_first_order(graph);
    const auto second = check_second_order(graph);
    res.rows.push_back({static_cast<double>(g), 1.0, params, first.max_error});
    res.rows.push_back({static_cast<double>(g), 2.0, params, second.max_error});
    worst1 = std::max(worst1, first.max_error);
    worst2 = std::max(worst2, second.max_error);
  }
  res.passed = worst1 <= 1e-4 && worst2 <= 1e-3;
  res.summary = format("100 graphs; first-order max rel error %.3g (tol 1e-4), second-order %.3g (tol 1e-3)",
                       worst1, worst2);
  return res;
}

SuiteResult envelope_suite() {
  using namespace analytic;
  SuiteResult res{"envelope", true, "", {"game", "theta", "phi", "residual"}, {}, 0.0};
  const auto dirac = dirac_wgan_game();
  const auto smooth = smooth_quadratic_game();
  const auto dirac_grid = symmetric_grid(0.1, 2.0, 20);
  const auto smooth_grid = linear_grid(-2.0, 2.0, 101);
  const auto a = verify_envelope(dirac, dirac_grid, 1e-8);
  const auto b = verify_envelope(smooth, smooth_grid, 1e-8);
  for (const auto& row : a.rows) res.rows.push_back({0.0, row.theta, row.phi, row.residual});
  for (const auto& row : b.rows) res.rows.push_back({1.0, row.theta, row.phi, row.residual});

  // h(theta, f(theta)) against M(theta), and autodiff partials against closed forms.
  double value_gap = 0.0, partial_gap = 0.0;
  for (const auto* game : {&dirac, &smooth}) {
    for (double theta : linear_grid(-2.0, 2.0, 101)) {
      const double phi = game->phi_star(theta);
      value_gap = std::max(value_gap, std::abs(game->h(theta, phi) - game->envelope(theta)));
      const auto p = autodiff_partials(*game, theta, phi + 0.37);
      partial_gap = std::max({partial_gap, std::abs(p.d1h - game->d1h(theta, phi + 0.37)),
                              std::abs(p.d2h - game->d2h(theta, phi + 0.37))});
    }
  }
  res.passed = a.passed && b.passed && value_gap <= 1e-10 && partial_gap <= 1e-8;
  res.summary = format("envelope residual dirac %.3g, smooth %.3g (tol 1e-8)", a.max_residual, b.max_residual) +
                format("; |h(f)-M| %.3g (tol 1e-10); partials %.3g (tol 1e-8)", value_gap, partial_gap);
  return res;
}

SuiteResult corollary_suite() {
  using namespace analytic;
  SuiteResult res{"corollary", true, "", {"phi_offset", "theta", "phi", "residual"}, {}, 0.0};
  const auto game = smooth_quadratic_game();
  const auto grid = linear_grid(-2.0, 2.0, 41);
  const auto at_optimum = verify_corollary(game, grid, 1e-10);
  const auto perturbed = verify_corollary(game, grid, 1e-10, 0.05);
  double min_perturbed = INFINITY;
  for (const auto& row : at_optimum.rows) res.rows.push_back({0.0, row.theta, row.phi, row.residual});
  for (const auto& row : perturbed.rows) {
    res.rows.push_back({0.05, row.theta, row.phi, row.residual});
    min_perturbed = std::min(min_perturbed, row.residual);
  }
  res.passed = at_optimum.passed && min_perturbed >= 0.01;
  res.summary = format("at f(theta) max %.3g (tol 1e-10); at f(theta)+0.05 min %.3g (need >= 0.01)",
                       at_optimum.max_residual, min_perturbed);
  return res;
}

SuiteResult dirac_r_suite() {
  SuiteResult res{"dirac-r", true, "", {"case", "phi", "r", "error"}, {}, 0.0};
  Rng rng = Rng(0xD1AC).split("dirac-r-suite");

  // p_theta = p_true: a generator that outputs exactly the real batch.
  const Dataset ring = Dataset::synthetic(DatasetSpec::parse("ring8"));
  const Tensor real = ring.sample(64, rng);
  const Model copy_generator{[](std::span<const Var> params, const Var&) { return params[0]; }, 2, 2};
  ParamSet theta(Role::kGenerator);
  theta.add("samples", real);
  const Tensor latents = sample_latent(64, 2, rng);
  ObjectiveSpec wgan;
  wgan.kind = ObjectiveKind::kWgan;
  double worst_equal = 0.0;
  for (int k = 0; k < 20; ++k) {
    MlpSpec spec{2, {8, 8}, 1, Activation::kLeakyRelu, 0.2, FinalActivation::kNone};
    const Model adversary_model = mlp_model(spec);
    const ParamSet phi = build_mlp(spec, 1000 + k, Role::kAdversary);
    const Network gen(copy_generator, bind(theta, true));
    const Network adv(adversary_model, bind(phi, true));
    const double r = advas_penalty(wgan, gen, adv, real, latents, rng).value().item();
    res.rows.push_back({0.0, static_cast<double>(k), r, std::abs(r)});
    worst_equal = std::max(worst_equal, std::abs(r));
  }

  // Dirac game through both the closed-form module and the GAN-level estimator.
  const auto game = analytic::dirac_wgan_game();
  const Dataset point_mass = Dataset::synthetic(DatasetSpec::parse("gauss1d(0,0)"));
  double worst_dirac = 0.0;
  const double theta0 = 0.5;
  for (int k = 0; k < 20; ++k) {
    const double phi = rng.uniform(-1.0, 1.0);
    const double r_closed = analytic::advas_r(game, theta0, phi);
    auto players = analytic::dirac_wgan_players(theta0, phi);
    const Network gen(players.generator, bind(players.theta, true));
    const Network adv(players.adversary, bind(players.phi, true));
    const Tensor zero_batch = point_mass.sample(16, rng);
    const double r_gan =
        advas_penalty(wgan, gen, adv, zero_batch, sample_latent(16, 1, rng), rng).value().item();
    const double err = std::max(std::abs(r_closed - theta0 * theta0), std::abs(r_gan - theta0 * theta0));
    res.rows.push_back({1.0, phi, r_gan, err});
    worst_dirac = std::max(worst_dirac, err);
  }
  res.passed = worst_equal <= 1e-12 && worst_dirac <= 1e-10;
  res.summary = format("p_theta = p_true: max r %.3g (tol 1e-12); Dirac |r - theta^2| %.3g (tol 1e-10)",
                       worst_equal, worst_dirac);
  return res;
}

SuiteResult estimator_suite() {
  SuiteResult res{"estimator", true, "", {"estimator", "mean", "std_error", "full_batch_r", "z_score"}, {}, 0.0};
  Rng rng = Rng(0xE57).split("estimator-suite");
  const std::size_t population = 64, minibatch = 4, pairs = 10000;
  const Tensor real_pop = gauss1d_sampler(population, 0.5, 1.0, rng);
  const Tensor latent_pop = sample_latent(population, 1, rng);
  const MlpSpec gspec{1, {}, 1, Activation::kRelu, 0.2, FinalActivation::kNone};
  const MlpSpec aspec{1, {4}, 1, Activation::kTanh, 0.2, FinalActivation::kNone};
  const Model gmodel = mlp_model(gspec), amodel = mlp_model(aspec);
  const ParamSet theta = build_mlp(gspec, 3, Role::kGenerator);
  const ParamSet phi = build_mlp(aspec, 4, Role::kAdversary);
  const Network gen(gmodel, bind(theta, false));
  const Network adv(amodel, bind(phi, true));
  ObjectiveSpec wgan;
  wgan.kind = ObjectiveKind::kWgan;

  // Uniform resampling of the populations makes the population gradient the
  // exact expectation of every minibatch gradient (the loss is linear in sample means).
  const auto full = adversary_loss(wgan, gen, adv, real_pop, latent_pop, rng);
  const auto g_full = flatten_values(gradient(full.value, adv.params()));
  double r_full = 0.0;
  for (double g : g_full) r_full += g * g;

  std::vector<double> unbiased, biased;
  unbiased.reserve(pairs);
  biased.reserve(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    const Tensor ra = resample(real_pop, minibatch, rng), rb = resample(real_pop, minibatch, rng);
    const Tensor za = resample(latent_pop, minibatch, rng), zb = resample(latent_pop, minibatch, rng);
    unbiased.push_back(advas_penalty_unbiased(wgan, gen, adv, ra, rb, za, zb, rng).value().item());
    biased.push_back(advas_penalty(wgan, gen, adv, ra, za, rng).value().item());
  }
  const auto mu = moments(unbiased), mb = moments(biased);
  const double z_unbiased = (mu.mean - r_full) / mu.std_error;
  const double z_biased = (mb.mean - r_full) / mb.std_error;
  res.rows.push_back({0.0, mu.mean, mu.std_error, r_full, z_unbiased});
  res.rows.push_back({1.0, mb.mean, mb.std_error, r_full, z_biased});
  res.passed = std::abs(z_unbiased) <= 3.0 && z_biased >= -3.0;
  res.summary = format("full-batch r %.5g; unbiased z = %.3f (|z| <= 3)", r_full, z_unbiased) +
                format("; biased z = %.3f (z >= -3)", z_biased);
  return res;
}

SuiteResult lambda_suite() {
  SuiteResult res{"lambda", true, "", {"pair", "lambda", "scaled_advas_norm", "orig_norm"}, {}, 0.0};
  Rng rng = Rng(0x1A4B).split("lambda-suite");
  std::size_t violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = draw(rng, 1, 50);
    const double so = std::pow(10.0, rng.uniform(-6.0, 6.0)), sa = std::pow(10.0, rng.uniform(-6.0, 6.0));
    std::vector<double> g_orig(n), g_advas(n);
    for (auto& v : g_orig) v = so * rng.normal();
    for (auto& v : g_advas) v = sa * rng.normal();
    const auto bundle = combine_gradients(g_orig, g_advas, AdvasConfig{});
    const double lam = bundle.lambda_used;
    const double scaled = lam * l2_norm(g_advas), orig = l2_norm(g_orig);
    res.rows.push_back({static_cast<double>(k), lam, scaled, orig});
    if (!(lam > 0.0 && lam <= 1.0) || scaled > orig * (1.0 + 1e-12)) ++violations;
  }
  res.passed = violations == 0;
  res.summary = std::to_string(violations) + " violations in 1000 random gradient pairs";
  return res;
}

SuiteResult preservation_suite() {
  SuiteResult res{"preservation", true, "", {"step", "theta_off", "theta_heuristic", "theta_fixed1", "max_gap"}, {}, 0.0};
  const auto game = analytic::smooth_quadratic_game();
  const auto off = analytic::teacher_forced_trajectory(game, 1.5, 200, 0.05, std::nullopt);
  const auto heuristic = analytic::teacher_forced_trajectory(game, 1.5, 200, 0.05, AdvasConfig{});
  const auto fixed = analytic::teacher_forced_trajectory(game, 1.5, 200, 0.05, AdvasConfig::fixed(1.0));
  double worst = 0.0;
  for (std::size_t k = 0; k < off.size(); ++k) {
    const double gap = std::max(std::abs(heuristic[k] - off[k]), std::abs(fixed[k] - off[k]));
    worst = std::max(worst, gap);
    res.rows.push_back({static_cast<double>(k), off[k], heuristic[k], fixed[k], gap});
  }
  res.passed = worst <= 1e-6;
  res.summary = format("200 teacher-forced steps, max |theta_on - theta_off| = %.3g (tol 1e-6)", worst);
  return res;
}

SuiteResult r_only_suite() {
  SuiteResult res{"r-only", true, "", {"iteration", "theta", "closed_form", "error"}, {}, 0.0};
  TrainConfig cfg;
  cfg.objective.kind = ObjectiveKind::kWgan;
  cfg.mode = TrainMode::kROnly;
  cfg.optimizer.kind = OptimizerConfig::Kind::kSgd;
  cfg.optimizer.lr = 0.1;
  cfg.iterations = 50;
  cfg.batch_size = 8;
  cfg.latent_dim = 1;
  cfg.eval_every = 1;
  cfg.eval_samples = 8;
  cfg.dataset = DatasetSpec::parse("gauss1d(0,0)");
  const Dataset dataset = Dataset::synthetic(cfg.dataset);
  const double theta0 = 1.0;
  double worst = 0.0;
  TrainHooks hooks;
  hooks.on_record = [&](const MetricRecord& rec, const TrainSnapshot& snap) {
    const double theta = (*snap.theta)["offset"][0];
    const double closed = theta0 * std::pow(1.0 - 2.0 * cfg.optimizer.lr, static_cast<double>(rec.iteration));
    worst = std::max(worst, std::abs(theta - closed));
    res.rows.push_back({static_cast<double>(rec.iteration), theta, closed, std::abs(theta - closed)});
  };
  const auto result = train(cfg, dataset, analytic::dirac_wgan_players(theta0, 0.5), hooks);
  res.passed = !result.aborted && res.rows.size() == cfg.iterations && worst <= 1e-10;
  res.summary = format("50 r-only SGD steps on the Dirac game, max |theta_k - theta_0 (1-2 lr)^k| = %.3g (tol 1e-10)",
                       worst);
  return res;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"gradient", "envelope", "corollary", "dirac-r",
                                              "estimator", "lambda", "preservation", "r-only"};
  return names;
}

bool is_suite(std::string_view name) {
  const auto& names = suite_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

SuiteResult run_suite(std::string_view name) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult res;
  if (name == "gradient") {
    res = gradient_suite();
  } else if (name == "envelope") {
    res = envelope_suite();
  } else if (name == "corollary") {
    res = corollary_suite();
  } else if (name == "dirac-r") {
    res = dirac_r_suite();
  } else if (name == "estimator") {
    res = estimator_suite();
  } else if (name == "lambda") {
    res = lambda_suite();
  } else if (name == "preservation") {
    res = preservation_suite();
  } else if (name == "r-only") {
    res = r_only_suite();
  } else {
    throw std::invalid_argument("unknown suite '" + std::string(name) + "'");
  }
  res.seconds = seconds_since(start);
  return res;
}

void write_residual_csv(const SuiteResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < result.columns.size(); ++i) out << (i ? "," : "") << result.columns[i];
  out << '\n';
  char buf[40];
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

std::vector<Var> make_leaves(std::span<const Shape> shapes, std::span<const double> flat, bool trainable) {
  std::vector<Var> leaves;
  std::size_t offset = 0;
  for (const auto& shape : shapes) {
    const std::size_t n = shape_numel(shape);
    Tensor t(shape, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                                        flat.begin() + static_cast<std::ptrdiff_t>(offset + n)));
    leaves.push_back(trainable ? Var::leaf(std::move(t)) : Var::constant(std::move(t)));
    offset += n;
  }
  return leaves;
}

RandomGraph random_graph(Rng& rng) {
  const std::size_t b = draw(rng, 2, 4), d = draw(rng, 1, 4), h = draw(rng, 2, 6);
  RandomGraph g;
  g.x_shapes = {{b, d}, {d}};
  g.y_shapes = {{d, h}, {h}, {h, 1}};
  for (std::size_t i = 0; i < total_numel(g.x_shapes); ++i) g.x0.push_back(rng.uniform(-1.5, 1.5));
  for (std::size_t i = 0; i < total_numel(g.y_shapes); ++i) g.y0.push_back(rng.uniform(-1.5, 1.5));

  constexpr std::size_t kPool = std::size(kUnaryPool);
  std::vector<std::size_t> input_ops(draw(rng, 0, 1)), hidden_ops(draw(rng, 1, 3)), output_ops(draw(rng, 0, 2));
  for (auto* ops : {&input_ops, &hidden_ops, &output_ops}) {
    for (auto& op : *ops) {
      op = rng.uniform_index(kPool);
      g.ops.push_back(kUnaryPool[op].name);
    }
  }
  const std::size_t mix = rng.uniform_index(3), reduction = rng.uniform_index(5);
  g.ops.push_back("mix" + std::to_string(mix));
  g.ops.push_back("reduction" + std::to_string(reduction));

  g.build = [=](std::span<const Var> xs, std::span<const Var> ys) {
    Var input = add(xs[0], broadcast(xs[1], {b, d}));
    for (auto op : input_ops) input = kUnaryPool[op].op(input);
    Var hidden = affine(input, ys[0], ys[1]);
    for (auto op : hidden_ops) hidden = kUnaryPool[op].op(hidden);
    // Cross the hidden layer back to input space and combine.
    const Var back = matmul(hidden, transpose(ys[0]));
    switch (mix) {
      case 0: hidden = add(hidden, broadcast(sum_rows(mul(back, input)), {b, h})); break;
      case 1: hidden = mul(hidden, broadcast(tanh(sum_to(back, {b, 1})), {b, h})); break;
      default: hidden = sub(hidden, broadcast(scale(sum(square(back)), 0.1), {b, h})); break;
    }
    Var out = matmul(hidden, ys[2]);
    for (auto op : output_ops) out = kUnaryPool[op].op(out);
    const Var flat[] = {out, hidden};
    const Var joined = concat(flat);
    switch (reduction) {
      case 0: return sum(out);
      case 1: return add(mean(square(out)), scale(sum(slice(joined, 1, b)), 0.5));
      case 2: return l2norm_squared(pad(slice(joined, 0, b + 1), 2, b + 4));
      case 3: return add(sum(sum_to(out, {1, 1})), mean(tanh(hidden)));
      default: return mean(log(add_scalar(square(joined), 1.0)));
    }
  };
  return g;
}

GradientComparison check_first_order(const RandomGraph& graph, double h, double floor) {
  const std::size_t nx = graph.x0.size();
  std::vector<double> flat = graph.x0;
  flat.insert(flat.end(), graph.y0.begin(), graph.y0.end());

  auto split = [&](std::span<const double> v, bool trainable) {
    auto xs = make_leaves(graph.x_shapes, v.subspan(0, nx), trainable);
    auto ys = make_leaves(graph.y_shapes, v.subspan(nx), trainable);
    return std::pair{xs, ys};
  };
  const auto [xs, ys] = split(flat, true);
  const Var out = graph.build(xs, ys);
  std::vector<Var> all = xs;
  all.insert(all.end(), ys.begin(), ys.end());
  const auto analytic = flatten_values(gradient(out, all));

  const auto fd = finite_difference_gradient(
      [&](std::span<const double> v) {
        const auto [cx, cy] = split(v, false);
        return graph.build(cx, cy).value().item();
      },
      flat, h);
  GradientComparison cmp;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    cmp.max_error = std::max(cmp.max_error, comparison_error(analytic[i], fd[i], floor));
  }
  cmp.count = fd.size();
  return cmp;
}

GradientComparison check_second_order(const RandomGraph& graph, double h, double floor) {
  const auto ys = make_leaves(graph.y_shapes, graph.y0, true);
  auto norm_sq = [&](std::span<const double> x, bool trainable) {
    const auto xs = make_leaves(graph.x_shapes, x, trainable);
    return std::pair{xs, squared_gradient_norm(graph.build(xs, ys), ys)};
  };
  const auto [xs, s] = norm_sq(graph.x0, true);
  const auto analytic = flatten_values(gradient(s, xs));
  const auto fd = finite_difference_gradient(
      [&](std::span<const double> x) { return norm_sq(x, false).second.value().item(); }, graph.x0, h);
  GradientComparison cmp;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    cmp.max_error = std::max(cmp.max_error, comparison_error(analytic[i], fd[i], floor));
  }
  cmp.count = fd.size();
  return cmp;
}

}  // namespace advas::verify
