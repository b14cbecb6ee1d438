#include "advas/checkpoint.hpp"

#include <fstream>

namespace advas {

using nlohmann::json;

namespace {

bool same_ema(const std::optional<EmaState>& a, const std::optional<EmaState>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || (a->decay == b->decay && a->shadow == b->shadow);
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw CheckpointError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  return a.format_version == b.format_version && a.seed == b.seed && a.iteration == b.iteration &&
         a.dataset == b.dataset && a.latent_dim == b.latent_dim && a.generator_spec == b.generator_spec &&
         a.generator == b.generator && a.adversary_spec == b.adversary_spec && a.adversary == b.adversary &&
         same_ema(a.ema, b.ema);
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky-relu";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky-relu") return Activation::kLeakyRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "' (relu, leaky-relu, tanh)");
}

std::string final_activation_name(FinalActivation a) {
  switch (a) {
    case FinalActivation::kNone: return "none";
    case FinalActivation::kSigmoid: return "sigmoid";
    case FinalActivation::kTanh: return "tanh";
  }
  return "?";
}

FinalActivation parse_final_activation(std::string_view name) {
  if (name == "none") return FinalActivation::kNone;
  if (name == "sigmoid") return FinalActivation::kSigmoid;
  if (name == "tanh") return FinalActivation::kTanh;
  throw std::invalid_argument("unknown final activation '" + std::string(name) + "' (none, sigmoid, tanh)");
}

json mlp_spec_to_json(const MlpSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"hidden", spec.hidden},
              {"output_dim", spec.output_dim},
              {"activation", activation_name(spec.activation)},
              {"leaky_slope", spec.leaky_slope},
              {"final_activation", final_activation_name(spec.final_activation)}};
}

MlpSpec mlp_spec_from_json(const json& j) {
  MlpSpec spec;
  spec.input_dim = required<std::size_t>(j, "input_dim");
  spec.hidden = required<std::vector<std::size_t>>(j, "hidden");
  spec.output_dim = required<std::size_t>(j, "output_dim");
  spec.activation = parse_activation(required<std::string>(j, "activation"));
  spec.leaky_slope = required<double>(j, "leaky_slope");
  spec.final_activation = parse_final_activation(required<std::string>(j, "final_activation"));
  spec.validate();
  return spec;
}

json param_set_to_json(const ParamSet& params) {
  json entries = json::array();
  for (const auto& e : params.entries()) {
    const auto values = e.tensor.data();
    entries.push_back(json{{"name", e.name},
                           {"shape", e.tensor.shape()},
                           {"values", std::vector<double>(values.begin(), values.end())}});
  }
  return entries;
}

ParamSet param_set_from_json(const json& j, Role role) {
  if (!j.is_array()) throw CheckpointError("parameter list must be an array");
  ParamSet params(role);
  for (const auto& e : j) {
    auto name = required<std::string>(e, "name");
    auto shape = required<Shape>(e, "shape");
    auto values = required<std::vector<double>>(e, "values");
    if (shape_numel(shape) != values.size()) {
      throw CheckpointError("parameter '" + name + "': shape " + shape_to_string(shape) + " needs " +
                            std::to_string(shape_numel(shape)) + " values, found " + std::to_string(values.size()));
    }
    params.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return params;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  auto player = [](const std::optional<MlpSpec>& spec, const ParamSet& params) {
    return json{{"spec", spec ? mlp_spec_to_json(*spec) : json(nullptr)}, {"params", param_set_to_json(params)}};
  };
  json j{{"format_version", ckpt.format_version},
         {"seed", ckpt.seed},
         {"iteration", ckpt.iteration},
         {"dataset", ckpt.dataset},
         {"latent_dim", ckpt.latent_dim},
         {"generator", player(ckpt.generator_spec, ckpt.generator)},
         {"adversary", player(ckpt.adversary_spec, ckpt.adversary)},
         {"ema", nullptr}};
  if (ckpt.ema) j["ema"] = json{{"decay", ckpt.ema->decay}, {"params", param_set_to_json(ckpt.ema->shadow)}};
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint ckpt;
  ckpt.format_version = required<int>(j, "format_version");
  if (ckpt.format_version != kCheckpointFormatVersion) {
    throw CheckpointError("unsupported checkpoint format_version " + std::to_string(ckpt.format_version));
  }
  ckpt.seed = required<std::uint64_t>(j, "seed");
  ckpt.iteration = required<std::size_t>(j, "iteration");
  ckpt.dataset = required<std::string>(j, "dataset");
  ckpt.latent_dim = required<std::size_t>(j, "latent_dim");
  auto player = [&](const char* key, Role role, std::optional<MlpSpec>& spec, ParamSet& params) {
    const auto& p = required<json>(j, key);
    const auto& s = required<json>(p, "spec");
    if (!s.is_null()) spec = mlp_spec_from_json(s);
    params = param_set_from_json(required<json>(p, "params"), role);
    if (spec && spec->parameter_count() != params.numel()) {
      throw CheckpointError(std::string(key) + ": parameter count does not match spec");
    }
  };
  player("generator", Role::kGenerator, ckpt.generator_spec, ckpt.generator);
  player("adversary", Role::kAdversary, ckpt.adversary_spec, ckpt.adversary);
  if (j.contains("ema") && !j["ema"].is_null()) {
    EmaState ema;
    ema.decay = required<double>(j["ema"], "decay");
    ema.shadow = param_set_from_json(required<json>(j["ema"], "params"), Role::kGenerator);
    if (!ema.shadow.same_layout(ckpt.generator)) throw CheckpointError("ema: layout differs from generator");
    ckpt.ema = std::move(ema);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out << checkpoint_to_json(ckpt).dump(1) << '\n';
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace advas
