#include "advas/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace advas {

void TrainConfig::validate() const {
  objective.validate();
  if (advas) advas->validate();
  optimizer.validate();
  if (n_adv < 1) throw std::invalid_argument("n_adv: must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations: must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch_size: must be >= 2");
  if (latent_dim < 1) throw std::invalid_argument("latent_dim: must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("eval_every: must be >= 1");
  if (eval_samples < 2) throw std::invalid_argument("eval_samples: must be >= 2");
  if (ema_decay && !(*ema_decay >= 0.0 && *ema_decay <= 1.0)) {
    throw std::invalid_argument("ema_decay: must lie in [0, 1]");
  }
}

namespace {

MlpSpec make_spec(const NetworkConfig& net, std::size_t in, std::size_t out) {
  MlpSpec spec;
  spec.input_dim = in;
  spec.hidden = net.hidden;
  spec.output_dim = out;
  spec.activation = net.activation;
  spec.leaky_slope = net.leaky_slope;
  spec.final_activation = net.final_activation;
  return spec;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

MlpSpec TrainConfig::generator_spec(std::size_t data_dim) const {
  return make_spec(generator, latent_dim, data_dim);
}

MlpSpec TrainConfig::adversary_spec(std::size_t data_dim) const {
  auto spec = make_spec(adversary, data_dim, 1);
  if (objective.kind == ObjectiveKind::kNsGan) spec.final_activation = FinalActivation::kSigmoid;
  return spec;
}

std::string metrics_csv_header() {
  return "iter,seconds,l_adv,l_gen,r,lambda,g_orig_norm,g_advas_norm,energy_distance,w1,modes_covered,hq_fraction";
}

std::string metrics_csv_row(const MetricRecord& rec) {
  const double nan = std::nan("");
  std::string row = std::to_string(rec.iteration);
  for (double v : {rec.seconds, rec.l_adv, rec.l_gen, rec.r, rec.lambda, rec.g_orig_norm, rec.g_advas_norm,
                   rec.eval.energy_distance, rec.eval.w1_1d.value_or(nan),
                   rec.eval.modes_covered ? static_cast<double>(*rec.eval.modes_covered) : nan,
                   rec.eval.high_quality_fraction.value_or(nan)}) {
    row += ',';
    row += format_value(v);
  }
  return row;
}

Players mlp_players(const TrainConfig& config, std::size_t data_dim) {
  const auto gspec = config.generator_spec(data_dim);
  const auto aspec = config.adversary_spec(data_dim);
  return Players{mlp_model(gspec), mlp_model(aspec), build_mlp(gspec, config.seed, Role::kGenerator),
                 build_mlp(aspec, config.seed, Role::kAdversary)};
}

AdversaryStepResult adversary_step(const TrainConfig& config, const Model& generator, const Model& adversary,
                                   const ParamSet& theta, ParamSet& phi, Optimizer& optimizer,
                                   const Dataset& dataset, Rng& rng) {
  const Network gen(generator, bind(theta, false));
  const Network adv(adversary, bind(phi, true));
  const Tensor real = dataset.sample(config.batch_size, rng);
  const Tensor latents = sample_latent(config.batch_size, config.latent_dim, rng);
  const auto loss = adversary_loss(config.objective, gen, adv, real, latents, rng);
  const auto grad = flatten_values(gradient(loss.value, adv.params()));
  double norm_sq = 0.0;
  for (double g : grad) norm_sq += g * g;
  optimizer.step(phi, grad);
  return AdversaryStepResult{loss.value.value().item(), norm_sq};
}

GradientBundle generator_step(const TrainConfig& config, const Model& generator, const Model& adversary,
                              ParamSet& theta, const ParamSet& phi, Optimizer& optimizer, const Dataset& dataset,
                              Rng& rng, bool measure_r) {
  const bool regularized = config.advas.has_value() || config.mode == TrainMode::kROnly;
  const AdvasConfig advas_config = config.advas.value_or(AdvasConfig{});

  GeneratorBatch batch;
  batch.real = dataset.sample(config.batch_size, rng);
  batch.latents = sample_latent(config.batch_size, config.latent_dim, rng);
  if (regularized && advas_config.estimator == Estimator::kUnbiasedProduct) {
    batch.real_b = dataset.sample(config.batch_size, rng);
    batch.latents_b = sample_latent(config.batch_size, config.latent_dim, rng);
  }

  const Network gen(generator, bind(theta, true));
  const Network adv(adversary, bind(phi, regularized || measure_r));

  GradientBundle bundle;
  if (regularized) {
    bundle = total_generator_gradient(config.objective, advas_config, gen, adv, batch, rng);
    if (config.mode == TrainMode::kROnly) {
      const double l_gen = bundle.l_gen, r = bundle.r;
      std::vector<double> zeros(bundle.g_advas.size(), 0.0);
      bundle = combine_gradients(std::move(zeros), std::move(bundle.g_advas), AdvasConfig::fixed(1.0));
      bundle.l_gen = l_gen;
      bundle.r = r;
    }
  } else {
    const auto l_gen = generator_loss(config.objective, gen, adv, batch.real, batch.latents);
    auto g_orig = flatten_values(gradient(l_gen.value, gen.params()));
    const std::size_t n = g_orig.size();
    bundle = combine_gradients(std::move(g_orig), std::vector<double>(n, 0.0), AdvasConfig::fixed(0.0));
    bundle.l_gen = l_gen.value.value().item();
    bundle.r = std::nan("");
    if (measure_r) {
      // A copy: logging must not shift the training stream.
      Rng probe = rng;
      bundle.r = advas_penalty(config.objective, gen, adv, batch.real, batch.latents, probe).value().item();
    }
  }
  optimizer.step(theta, bundle.g_total);
  return bundle;
}

Tensor generate_samples(const Model& generator, const ParamSet& theta, std::size_t n, std::size_t latent_dim,
                        Rng& rng) {
  const Tensor z = sample_latent(n, latent_dim, rng);
  return generator_forward(generator, bind(theta, false), Var::constant(z)).value();
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, const TrainHooks& hooks) {
  return train(config, dataset, mlp_players(config, dataset.data_dim()), hooks);
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, Players players, const TrainHooks& hooks) {
  config.validate();
  if (players.generator.input_dim != config.latent_dim) {
    throw std::invalid_argument("latent_dim: generator expects " + std::to_string(players.generator.input_dim));
  }

  const Rng root(config.seed);
  Rng adversary_rng = root.split("adversary");
  Rng generator_rng = root.split("generator");
  Rng reference_rng = root.split("eval-reference");
  const Tensor reference = dataset.sample(config.eval_samples, reference_rng);

  auto make = [&](Role role, std::size_t numel) {
    return hooks.make_optimizer ? hooks.make_optimizer(role, numel) : make_optimizer(config.optimizer, numel);
  };
  auto adversary_opt = make(Role::kAdversary, players.phi.numel());
  auto generator_opt = make(Role::kGenerator, players.theta.numel());

  TrainResult result;
  result.theta = players.theta;
  result.phi = players.phi;
  if (config.ema_decay) result.ema = ema_init(*config.ema_decay, result.theta);

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const bool record_now = it % config.eval_every == 0 || it == config.iterations;
    try {
      AdversaryStepResult last_adv;
      for (std::size_t k = 0; k < config.n_adv; ++k) {
        last_adv = adversary_step(config, players.generator, players.adversary, result.theta, result.phi,
                                  *adversary_opt, dataset, adversary_rng);
      }
      const auto bundle = generator_step(config, players.generator, players.adversary, result.theta, result.phi,
                                         *generator_opt, dataset, generator_rng, record_now);
      if (result.ema) result.ema = ema_update(*result.ema, result.theta);

      if (record_now) {
        MetricRecord rec;
        rec.iteration = it;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.l_adv = last_adv.l_adv;
        rec.l_gen = bundle.l_gen;
        rec.r = bundle.r;
        rec.lambda = bundle.lambda_used;
        rec.g_orig_norm = l2_norm(bundle.g_orig);
        rec.g_advas_norm = l2_norm(bundle.g_advas);
        Rng eval_rng = root.split("eval-latents");
        const ParamSet& eval_theta = result.ema ? result.ema->shadow : result.theta;
        const Tensor generated =
            generate_samples(players.generator, eval_theta, config.eval_samples, config.latent_dim, eval_rng);
        rec.eval = evaluate(dataset, generated, reference);
        result.records.push_back(rec);
        if (hooks.on_record) {
          hooks.on_record(rec, TrainSnapshot{it, &result.theta, &result.phi,
                                             result.ema ? &*result.ema : nullptr});
        }
      }
    } catch (const NonFiniteError& err) {
      result.aborted = true;
      result.abort_message = "iteration " + std::to_string(it) + ": " + err.what();
      break;
    }
  }
  return result;
}

}  // namespace advas
