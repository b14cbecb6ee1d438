#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "advas/checkpoint.hpp"
#include "advas/config.hpp"

namespace advas {

/// Overrides the config's output_dir when set.
inline constexpr const char* kOutputRootEnv = "ADVAS_OUTPUT_ROOT";

std::filesystem::path resolve_output_root(const ExperimentConfig& config);
/// <root>/<label>/<seed>
std::filesystem::path run_directory(const ExperimentConfig& config, std::uint64_t seed);

struct RunOutcome {
  std::uint64_t seed = 0;
  std::filesystem::path directory;
  std::size_t records = 0;
  bool aborted = false;
  std::string message;
};

/// One training run: metrics.csv streamed row by row, checkpoint.json rewritten
/// at every record, config.json with the resolved configuration.
RunOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream& log);

/// One run per configured seed.
std::vector<RunOutcome> run_experiment(const ExperimentConfig& config, std::ostream& log);

Checkpoint make_checkpoint(const TrainConfig& config, std::size_t data_dim, const TrainSnapshot& snapshot);

/// Samples n points from a checkpointed generator (EMA shadow when present)
/// and compares them with n fresh draws from `dataset`.
EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const Dataset& dataset, std::size_t n);

}  // namespace advas
