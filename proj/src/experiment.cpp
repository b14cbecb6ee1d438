#include "advas/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>

namespace advas {

std::filesystem::path resolve_output_root(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

std::filesystem::path run_directory(const ExperimentConfig& config, std::uint64_t seed) {
  return resolve_output_root(config) / config.label / std::to_string(seed);
}

Checkpoint make_checkpoint(const TrainConfig& config, std::size_t data_dim, const TrainSnapshot& snapshot) {
  Checkpoint ckpt;
  ckpt.seed = config.seed;
  ckpt.iteration = snapshot.iteration;
  ckpt.dataset = config.dataset.key_string();
  ckpt.latent_dim = config.latent_dim;
  ckpt.generator_spec = config.generator_spec(data_dim);
  ckpt.generator = *snapshot.theta;
  ckpt.adversary_spec = config.adversary_spec(data_dim);
  ckpt.adversary = *snapshot.phi;
  if (snapshot.ema) ckpt.ema = *snapshot.ema;
  return ckpt;
}

RunOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream& log) {
  RunOutcome outcome;
  outcome.seed = seed;
  outcome.directory = run_directory(config, seed);
  std::filesystem::create_directories(outcome.directory);

  ExperimentConfig resolved = config;
  resolved.seeds = {seed};
  resolved.train.seed = seed;
  {
    std::ofstream out(outcome.directory / "config.json");
    out << experiment_config_to_json(resolved).dump(2) << '\n';
  }

  const Dataset dataset = Dataset::open(resolved.train.dataset);
  std::ofstream csv(outcome.directory / "metrics.csv");
  if (!csv) throw std::runtime_error("cannot write " + (outcome.directory / "metrics.csv").string());
  csv << metrics_csv_header() << '\n' << std::flush;

  TrainHooks hooks;
  hooks.on_record = [&](const MetricRecord& rec, const TrainSnapshot& snapshot) {
    csv << metrics_csv_row(rec) << '\n' << std::flush;
    save_checkpoint(make_checkpoint(resolved.train, dataset.data_dim(), snapshot),
                    outcome.directory / "checkpoint.json");
    ++outcome.records;
  };

  log << "[" << config.label << " seed " << seed << "] training " << resolved.train.iterations << " iterations -> "
      << outcome.directory.string() << '\n';
  const TrainResult result = train(resolved.train, dataset, hooks);
  outcome.aborted = result.aborted;
  outcome.message = result.abort_message;
  if (result.aborted) {
    log << "[" << config.label << " seed " << seed << "] aborted: " << result.abort_message << '\n';
    std::ofstream(outcome.directory / "abort.txt") << result.abort_message << '\n';
  } else if (!result.records.empty()) {
    const auto& last = result.records.back();
    log << "[" << config.label << " seed " << seed << "] done: energy distance " << last.eval.energy_distance
        << " after " << last.seconds << " s\n";
  }
  return outcome;
}

std::vector<RunOutcome> run_experiment(const ExperimentConfig& config, std::ostream& log) {
  std::vector<RunOutcome> outcomes;
  for (std::uint64_t seed : config.seeds) outcomes.push_back(run_seed(config, seed, log));
  return outcomes;
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const Dataset& dataset, std::size_t n) {
  if (!ckpt.generator_spec) throw std::invalid_argument("checkpoint has no generator architecture");
  if (ckpt.generator_spec->output_dim != dataset.data_dim()) {
    throw std::invalid_argument("generator output dimension " + std::to_string(ckpt.generator_spec->output_dim) +
                                " does not match dataset dimension " + std::to_string(dataset.data_dim()));
  }
  const Model generator = mlp_model(*ckpt.generator_spec);
  const Rng root(ckpt.seed);
  Rng latent_rng = root.split("eval-cli-latents");
  Rng reference_rng = root.split("eval-cli-reference");
  const ParamSet& theta = ckpt.ema ? ckpt.ema->shadow : ckpt.generator;
  const Tensor generated = generate_samples(generator, theta, n, ckpt.latent_dim, latent_rng);
  const Tensor reference = dataset.sample(n, reference_rng);
  return evaluate(dataset, generated, reference);
}

}  // namespace advas
