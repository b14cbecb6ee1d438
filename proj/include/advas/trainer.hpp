#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "advas/evalkit.hpp"
#include "advas/nets.hpp"
#include "advas/objectives.hpp"
#include "advas/optim.hpp"
#include "advas/regularizer.hpp"

namespace advas {

enum class TrainMode { kStandard, kROnly };

struct NetworkConfig {
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::kRelu;
  double leaky_slope = 0.2;
  FinalActivation final_activation = FinalActivation::kNone;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct TrainConfig {
  ObjectiveSpec objective;
  std::optional<AdvasConfig> advas;  // disabled when empty
  TrainMode mode = TrainMode::kStandard;
  std::size_t n_adv = 1;
  std::size_t batch_size = 256;
  std::size_t latent_dim = 2;
  std::size_t iterations = 1000;
  OptimizerConfig optimizer;
  std::optional<double> ema_decay;
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;
  std::size_t eval_samples = 1000;
  DatasetSpec dataset;
  NetworkConfig generator;
  NetworkConfig adversary;

  void validate() const;
  MlpSpec generator_spec(std::size_t data_dim) const;
  MlpSpec adversary_spec(std::size_t data_dim) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct MetricRecord {
  std::size_t iteration = 0;
  double seconds = 0.0;
  double l_adv = 0.0;
  double l_gen = 0.0;
  double r = 0.0;
  double lambda = 0.0;
  double g_orig_norm = 0.0;
  double g_advas_norm = 0.0;
  EvalReport eval;
};

/// Fixed column order of the metrics CSV.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricRecord& record);

/// Architectures plus their current parameters.
struct Players {
  Model generator;
  Model adversary;
  ParamSet theta;
  ParamSet phi;
};

Players mlp_players(const TrainConfig& config, std::size_t data_dim);

struct AdversaryStepResult {
  double l_adv = 0.0;
  double grad_norm_squared = 0.0;
};

/// One optimizer step on phi against L_adv; theta is read only.
AdversaryStepResult adversary_step(const TrainConfig& config, const Model& generator, const Model& adversary,
                                   const ParamSet& theta, ParamSet& phi, Optimizer& optimizer,
                                   const Dataset& dataset, Rng& rng);

/// One optimizer step on theta. Standard mode descends g_total (g_orig when
/// the regularizer is disabled); r-only mode descends grad_theta r~ alone and
/// reports g_orig as zero. With `measure_r`, r is evaluated even when disabled.
GradientBundle generator_step(const TrainConfig& config, const Model& generator, const Model& adversary,
                              ParamSet& theta, const ParamSet& phi, Optimizer& optimizer, const Dataset& dataset,
                              Rng& rng, bool measure_r = false);

struct TrainSnapshot {
  std::size_t iteration = 0;
  const ParamSet* theta = nullptr;
  const ParamSet* phi = nullptr;
  const EmaState* ema = nullptr;
};

struct TrainHooks {
  std::function<std::unique_ptr<Optimizer>(Role, std::size_t numel)> make_optimizer;
  /// Called for every metric record as soon as it exists.
  std::function<void(const MetricRecord&, const TrainSnapshot&)> on_record;
};

struct TrainResult {
  ParamSet theta;
  ParamSet phi;
  std::optional<EmaState> ema;
  std::vector<MetricRecord> records;
  bool aborted = false;
  std::string abort_message;
};

/// Generator samples for evaluation, from the EMA shadow when present.
Tensor generate_samples(const Model& generator, const ParamSet& theta, std::size_t n, std::size_t latent_dim,
                        Rng& rng);

TrainResult train(const TrainConfig& config, const Dataset& dataset, const TrainHooks& hooks = {});
TrainResult train(const TrainConfig& config, const Dataset& dataset, Players players,
                  const TrainHooks& hooks = {});

}  // namespace advas
