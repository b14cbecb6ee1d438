#pragma once

// Verification suites behind `advas verify`. Each suite is self-contained,
// deterministic, and returns a pass flag with a residual table.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "advas/autodiff.hpp"
#include "advas/rng.hpp"

namespace advas::verify {

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::string summary;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  double seconds = 0.0;
};

const std::vector<std::string>& suite_names();
bool is_suite(std::string_view name);

/// Throws std::invalid_argument for unknown names.
SuiteResult run_suite(std::string_view name);

void write_residual_csv(const SuiteResult& result, const std::filesystem::path& path);

/// A randomly composed scalar expression f(x, y) over two groups of leaves.
/// y plays the adversary parameters, x everything upstream of them.
struct RandomGraph {
  std::vector<Shape> x_shapes;
  std::vector<Shape> y_shapes;
  std::vector<double> x0;
  std::vector<double> y0;
  std::function<Var(std::span<const Var> xs, std::span<const Var> ys)> build;
  std::vector<std::string> ops;  // op names used, for diagnostics
};

RandomGraph random_graph(Rng& rng);

/// Leaves with values taken from `flat` in order; `trainable` makes them differentiable.
std::vector<Var> make_leaves(std::span<const Shape> shapes, std::span<const double> flat, bool trainable);

struct GradientComparison {
  double max_error = 0.0;  // |analytic - fd| / max(|fd|, floor)
  std::size_t count = 0;
};

/// First order: gradient() of f over all leaves against central differences.
GradientComparison check_first_order(const RandomGraph& graph, double h = 1e-5, double floor = 1e-3);

/// Second order: grad_x |grad_y f|^2 against central differences of the scalar |grad_y f|^2.
GradientComparison check_second_order(const RandomGraph& graph, double h = 1e-5, double floor = 1e-3);

}  // namespace advas::verify
