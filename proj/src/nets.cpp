#include "advas/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advas {

std::string_view role_name(Role role) { return role == Role::kGenerator ? "generator" : "adversary"; }

void ParamSet::add(std::string name, Tensor tensor) {
  for (const auto& entry : entries_) {
    if (entry.name == name) throw std::invalid_argument("duplicate parameter name: " + name);
  }
  entries_.push_back({std::move(name), std::move(tensor)});
}

std::size_t ParamSet::numel() const {
  std::size_t n = 0;
  for (const auto& entry : entries_) n += entry.tensor.numel();
  return n;
}

const Tensor& ParamSet::operator[](std::string_view name) const {
  for (const auto& entry : entries_) {
    if (entry.name == name) return entry.tensor;
  }
  throw std::out_of_range("no parameter named " + std::string(name));
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(numel());
  for (const auto& entry : entries_) {
    flat.insert(flat.end(), entry.tensor.data().begin(), entry.tensor.data().end());
  }
  return flat;
}

ParamSet ParamSet::unflatten(std::span<const double> flat) const {
  if (flat.size() != numel()) {
    throw ShapeError("unflatten: expected " + std::to_string(numel()) + " values, got " +
                     std::to_string(flat.size()));
  }
  ParamSet out = *this;
  std::size_t offset = 0;
  for (auto& entry : out.entries_) {
    auto dst = entry.tensor.data();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].tensor.shape() != other.entries_[i].tensor.shape()) {
      return false;
    }
  }
  return true;
}

std::vector<Var> bind(const ParamSet& params, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& entry : params.entries()) {
    vars.push_back(trainable ? Var::leaf(entry.tensor) : Var::constant(entry.tensor));
  }
  return vars;
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("MlpSpec: dimensions must be >= 1");
  if (std::any_of(hidden.begin(), hidden.end(), [](std::size_t w) { return w < 1; })) {
    throw std::invalid_argument("MlpSpec: hidden widths must be >= 1");
  }
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t count = 0;
  std::size_t fan_in = input_dim;
  for (std::size_t width : hidden) {
    count += (fan_in + 1) * width;
    fan_in = width;
  }
  return count + (fan_in + 1) * output_dim;
}

ParamSet build_mlp(const MlpSpec& spec, std::uint64_t seed, Role role) {
  spec.validate();
  Rng rng = Rng(seed).split(role_name(role));
  ParamSet params(role);
  std::vector<std::size_t> widths = spec.hidden;
  widths.push_back(spec.output_dim);
  std::size_t fan_in = spec.input_dim;
  for (std::size_t layer = 0; layer < widths.size(); ++layer) {
    const std::size_t fan_out = widths[layer];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w = Tensor::zeros({fan_in, fan_out});
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
    params.add("layer" + std::to_string(layer) + ".weight", std::move(w));
    params.add("layer" + std::to_string(layer) + ".bias", Tensor::zeros({fan_out}));
    fan_in = fan_out;
  }
  return params;
}

Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, const Var& input) {
  const std::size_t layers = spec.hidden.size() + 1;
  if (params.size() != 2 * layers) {
    throw ShapeError("mlp_forward: expected " + std::to_string(2 * layers) + " parameter tensors, got " +
                     std::to_string(params.size()));
  }
  Var h = input;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    h = affine(h, params[2 * layer], params[2 * layer + 1]);
    if (layer + 1 < layers) {
      switch (spec.activation) {
        case Activation::kRelu: h = relu(h); break;
        case Activation::kLeakyRelu: h = leaky_relu(h, spec.leaky_slope); break;
        case Activation::kTanh: h = tanh(h); break;
      }
    }
  }
  switch (spec.final_activation) {
    case FinalActivation::kNone: break;
    case FinalActivation::kSigmoid: h = sigmoid(h); break;
    case FinalActivation::kTanh: h = tanh(h); break;
  }
  return h;
}

Model mlp_model(const MlpSpec& spec) {
  spec.validate();
  return Model{[spec](std::span<const Var> params, const Var& input) { return mlp_forward(spec, params, input); },
               spec.input_dim, spec.output_dim};
}

Var Network::operator()(const Var& input) const { return model_->forward(params_, input); }

namespace {

Var checked_forward(const Model& model, std::span<const Var> params, const Var& input,
                    std::size_t output_dim, std::string_view who) {
  if (input.value().rank() != 2 || input.shape()[1] != model.input_dim) {
    throw ShapeError(std::string(who) + ": input " + shape_to_string(input.shape()) + " vs expected (batch, " +
                     std::to_string(model.input_dim) + ")");
  }
  Var out = model.forward(params, input);
  const Shape expected{input.shape()[0], output_dim};
  if (out.shape() != expected) {
    throw ShapeError(std::string(who) + ": output " + shape_to_string(out.shape()) + " vs expected " +
                     shape_to_string(expected));
  }
  return out;
}

}  // namespace

Var generator_forward(const Model& model, std::span<const Var> theta, const Var& z) {
  return checked_forward(model, theta, z, model.output_dim, "generator_forward");
}

Var adversary_forward(const Model& model, std::span<const Var> phi, const Var& x) {
  return checked_forward(model, phi, x, 1, "adversary_forward");
}

Tensor sample_latent(std::size_t n, std::size_t dim, Rng& rng) {
  if (n < 1 || dim < 1) throw std::invalid_argument("sample_latent: n and dim must be >= 1");
  Tensor z = Tensor::zeros({n, dim});
  for (double& v : z.data()) v = rng.normal();
  return z;
}

EmaState ema_init(double decay, const ParamSet& current) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw std::invalid_argument("ema decay must lie in [0, 1]");
  return EmaState{decay, current};
}

EmaState ema_update(const EmaState& state, const ParamSet& current) {
  if (!state.shadow.same_layout(current)) throw ShapeError("ema_update: parameter layouts differ");
  EmaState next = state;
  const double d = state.decay;
  auto& dst = next.shadow.entries();
  const auto& src = current.entries();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto out = dst[i].tensor.data();
    auto in = src[i].tensor.data();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = d * out[j] + (1.0 - d) * in[j];
  }
  return next;
}

}  // namespace advas
