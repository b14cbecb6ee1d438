#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "advas/nets.hpp"

namespace advas {

inline constexpr int kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  std::string dataset;
  std::size_t latent_dim = 1;
  std::optional<MlpSpec> generator_spec;  // empty for hand-built models
  ParamSet generator{Role::kGenerator};
  std::optional<MlpSpec> adversary_spec;
  ParamSet adversary{Role::kAdversary};
  std::optional<EmaState> ema;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b);
};

std::string activation_name(Activation a);
Activation parse_activation(std::string_view name);
std::string final_activation_name(FinalActivation a);
FinalActivation parse_final_activation(std::string_view name);

nlohmann::json mlp_spec_to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const nlohmann::json& j);

nlohmann::json param_set_to_json(const ParamSet& params);
ParamSet param_set_from_json(const nlohmann::json& j, Role role);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Writes through a temporary file and renames, so readers never see a partial file.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace advas
