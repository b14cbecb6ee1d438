#include "advas/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace advas {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (kind == Kind::kAdam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  }
}

void adam_update(AdamState& state, std::span<double> param, std::span<const double> grad, double lr,
                 double beta1, double beta2, double eps) {
  if (param.size() != grad.size()) throw ShapeError("adam_update: parameter/gradient length mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  if (state.m.size() != param.size() || state.v.size() != param.size()) {
    throw ShapeError("adam_update: moment length does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

namespace {

template <typename F>
void for_each_flat(ParamSet& params, std::span<const double> grad, F f) {
  if (grad.size() != params.numel()) {
    throw ShapeError("optimizer: gradient has " + std::to_string(grad.size()) + " entries, parameters have " +
                     std::to_string(params.numel()));
  }
  std::size_t offset = 0;
  for (auto& entry : params.entries()) {
    auto data = entry.tensor.data();
    f(data, grad.subspan(offset, data.size()), offset);
    offset += data.size();
  }
}

}  // namespace

void SgdOptimizer::step(ParamSet& params, std::span<const double> grad) {
  for_each_flat(params, grad, [this](std::span<double> p, std::span<const double> g, std::size_t) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
  });
  ++steps_;
}

AdamOptimizer::AdamOptimizer(const OptimizerConfig& config, std::size_t numel) : config_(config) {
  state_.m.assign(numel, 0.0);
  state_.v.assign(numel, 0.0);
}

void AdamOptimizer::step(ParamSet& params, std::span<const double> grad) {
  // Operate on the flat view so one step counter covers every tensor.
  std::vector<double> flat = params.flatten();
  adam_update(state_, flat, grad, config_.lr, config_.beta1, config_.beta2, config_.eps);
  params = params.unflatten(flat);
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, std::size_t numel) {
  config.validate();
  if (config.kind == OptimizerConfig::Kind::kSgd) return std::make_unique<SgdOptimizer>(config.lr);
  return std::make_unique<AdamOptimizer>(config, numel);
}

}  // namespace advas
