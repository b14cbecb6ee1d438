#pragma once

// Experiment configuration as a single JSON document.
//
// Example:
//   {
//     "label": "advas", "output_dir": "runs", "seeds": [1, 2, 3],
//     "dataset": "ring8",
//     "objective": {"kind": "wgan-gp", "gp_weight": 10},
//     "advas": {"lambda": "heuristic", "estimator": "biased"},
//     "n_adv": 1, "iterations": 10000
//   }
//
// Omitted fields take the TrainConfig defaults. Unknown fields are rejected.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "advas/trainer.hpp"

namespace advas {

/// Validation failure; `path()` names the offending field, e.g. "objective.gp_weight".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::invalid_argument(path.empty() ? message : path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ExperimentConfig {
  std::string label = "run";
  std::filesystem::path output_dir = "runs";
  std::vector<std::uint64_t> seeds{0};
  TrainConfig train;  // train.seed is replaced per run

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ParsedConfig {
  ExperimentConfig config;
  std::vector<std::string> notices;  // defaults worth telling the user about
};

ParsedConfig parse_experiment_config(const nlohmann::json& doc);
ParsedConfig parse_experiment_config_text(std::string_view text);
ParsedConfig load_experiment_config(const std::filesystem::path& path);

/// Every field written explicitly, so parsing the result reproduces `config`.
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

nlohmann::json network_config_to_json(const NetworkConfig& net);

}  // namespace advas
