#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "advas/nets.hpp"

namespace advas {

struct OptimizerConfig {
  enum class Kind { kSgd, kAdam };
  Kind kind = Kind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam step, in place.
void adam_update(AdamState& state, std::span<double> param, std::span<const double> grad, double lr,
                 double beta1, double beta2, double eps);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Descends along `grad`, laid out as params.flatten().
  virtual void step(ParamSet& params, std::span<const double> grad) = 0;
  virtual std::uint64_t step_count() const = 0;
};

class SgdOptimizer final : public Optimizer {
 public:
  explicit SgdOptimizer(double lr) : lr_(lr) {}
  void step(ParamSet& params, std::span<const double> grad) override;
  std::uint64_t step_count() const override { return steps_; }

 private:
  double lr_;
  std::uint64_t steps_ = 0;
};

class AdamOptimizer final : public Optimizer {
 public:
  AdamOptimizer(const OptimizerConfig& config, std::size_t numel);
  void step(ParamSet& params, std::span<const double> grad) override;
  std::uint64_t step_count() const override { return state_.step; }
  const AdamState& state() const { return state_; }

 private:
  OptimizerConfig config_;
  AdamState state_;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, std::size_t numel);

}  // namespace advas
