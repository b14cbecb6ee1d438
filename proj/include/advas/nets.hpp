#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "advas/autodiff.hpp"
#include "advas/rng.hpp"
#include "advas/tensor.hpp"

namespace advas {

enum class Role { kGenerator, kAdversary };

std::string_view role_name(Role role);

struct ParamEntry {
  std::string name;
  Tensor tensor;

  friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

/// Ordered, uniquely named trainable tensors of one player.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(Role role) : role_(role) {}

  void add(std::string name, Tensor tensor);

  Role role() const { return role_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t numel() const;
  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<ParamEntry>& entries() { return entries_; }
  const Tensor& operator[](std::string_view name) const;

  std::vector<double> flatten() const;
  /// Copy of this set with values taken from `flat`, in entry order.
  ParamSet unflatten(std::span<const double> flat) const;
  bool same_layout(const ParamSet& other) const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  Role role_ = Role::kGenerator;
  std::vector<ParamEntry> entries_;
};

/// Wraps each tensor as a graph input, trainable or constant.
std::vector<Var> bind(const ParamSet& params, bool trainable);

enum class Activation { kRelu, kLeakyRelu, kTanh };
enum class FinalActivation { kNone, kSigmoid, kTanh };

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 1;
  Activation activation = Activation::kRelu;
  double leaky_slope = 0.2;
  FinalActivation final_activation = FinalActivation::kNone;

  void validate() const;
  std::size_t parameter_count() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Deterministic initialization: weights ~ U(±sqrt(6/(fan_in+fan_out))), zero biases.
ParamSet build_mlp(const MlpSpec& spec, std::uint64_t seed, Role role);

Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, const Var& input);

using ForwardFn = std::function<Var(std::span<const Var> params, const Var& input)>;

/// A network architecture: forward map over bound parameters.
struct Model {
  ForwardFn forward;
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
};

Model mlp_model(const MlpSpec& spec);

/// A model evaluated at particular parameter handles.
class Network {
 public:
  Network(const Model& model, std::vector<Var> params) : model_(&model), params_(std::move(params)) {}

  Var operator()(const Var& input) const;
  std::span<const Var> params() const { return params_; }

 private:
  const Model* model_;
  std::vector<Var> params_;
};

/// Output (batch, output_dim) for input (batch, input_dim).
Var generator_forward(const Model& model, std::span<const Var> theta, const Var& z);
/// Output (batch, 1) for input (batch, data_dim).
Var adversary_forward(const Model& model, std::span<const Var> phi, const Var& x);

/// n x dim standard normal draws.
Tensor sample_latent(std::size_t n, std::size_t dim, Rng& rng);

struct EmaState {
  double decay = 0.999;
  ParamSet shadow;
};

EmaState ema_init(double decay, const ParamSet& current);
/// shadow <- decay * shadow + (1 - decay) * current.
EmaState ema_update(const EmaState& state, const ParamSet& current);

}  // namespace advas
