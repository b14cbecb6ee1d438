#pragma once

// Define-by-run reverse-mode automatic differentiation.
//
// Every operation evaluates eagerly and records a node holding its value and
// parents. Adjoint rules are themselves written in terms of recorded
// operations, so gradient(..., GradMode::kCreateGraph) returns expressions that
// can be differentiated again. This is what makes the gradient of a gradient
// norm available.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "advas/tensor.hpp"

namespace advas {

enum class OpKind {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kScale,
  kAddScalar,
  kMatMul,
  kAffine,
  kTranspose,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kTanh,
  kLog,
  kSqrt,
  kSquare,
  kSum,
  kMean,
  kSumTo,
  kClampMin,
  kClampMax,
  kL2NormSquared,
  kBroadcast,
  kReshape,
  kConcat,
  kSlice,
  kPad,
};

std::string_view op_name(OpKind kind);

struct Node;

/// Handle to a recorded graph node. Cheap to copy; the node is immutable.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  /// A trainable input: gradients may be requested with respect to it.
  static Var leaf(Tensor value);
  /// A constant input: never differentiated.
  static Var constant(Tensor value);
  static Var scalar(double value) { return constant(Tensor::scalar(value)); }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  OpKind kind() const;
  bool requires_grad() const;
  bool valid() const { return node_ != nullptr; }

  const Node* node() const { return node_.get(); }
  const std::shared_ptr<const Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  OpKind kind = OpKind::kConstant;
  std::shared_ptr<const Tensor> value;
  std::vector<Var> parents;
  bool requires_grad = false;
  // Op attributes: scalar constant, recorded shape, offsets.
  double scalar = 0.0;
  Shape attr_shape;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Same value, no history.
Var detach(const Var& x);

// Elementwise, identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& x);
Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);

Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var square(const Var& x);
/// max(x, c); the derivative at the kink is 0.
Var clamp_min(const Var& x, double c);
/// min(x, c); the derivative at the kink is 0.
Var clamp_max(const Var& x, double c);

// Linear algebra on rank-2 tensors.
Var matmul(const Var& a, const Var& b);
/// x·W + b with b of shape (n) or (1, n) expanded over rows.
Var affine(const Var& x, const Var& w, const Var& b);
Var transpose(const Var& x);

// Reductions.
Var sum(const Var& x);
Var mean(const Var& x);
Var l2norm_squared(const Var& x);
/// Reduce to `target`: a scalar, (1, n) / (n) over rows, or (m, 1) over columns.
Var sum_to(const Var& x, const Shape& target);
/// Row sums of an (m, n) matrix, shape (m, 1).
Var sum_rows(const Var& x);

// Shape manipulation.
/// Expand a scalar, a row (n)/(1, n) or a column (m, 1) to `target`.
Var broadcast(const Var& x, const Shape& target);
Var reshape(const Var& x, const Shape& shape);
/// Flatten each input and join into one vector.
Var concat(std::span<const Var> xs);
/// Contiguous range of the flattened input, as a vector.
Var slice(const Var& x, std::size_t offset, std::size_t length);
/// Vector of `total` zeros with x (flattened) written at `offset`.
Var pad(const Var& x, std::size_t offset, std::size_t total);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& x) { return neg(x); }
inline Var operator*(double c, const Var& x) { return scale(x, c); }
inline Var operator*(const Var& x, double c) { return scale(x, c); }

enum class GradMode {
  kValueOnly,    // returned gradients are constants
  kCreateGraph,  // returned gradients are differentiable expressions
};

/// Gradients of a scalar `output` with respect to each of `wrt`.
///
/// `wrt` may name leaves or interior nodes. A target unreachable from the
/// output receives a zero tensor of its own shape. Throws ShapeError when the
/// output has more than one element.
std::vector<Var> gradient(const Var& output, std::span<const Var> wrt,
                          GradMode mode = GradMode::kValueOnly);

std::vector<Tensor> gradient_values(const Var& output, std::span<const Var> wrt);

/// Concatenation of the values of `xs` into one flat vector.
std::vector<double> flatten_values(std::span<const Var> xs);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> x,
                                               double h = 1e-5);

namespace testing {

/// Negates the adjoint of one op kind for every subsequent gradient call.
/// Used to check that gradient verification catches broken rules.
class ScopedAdjointFault {
 public:
  explicit ScopedAdjointFault(OpKind kind);
  ~ScopedAdjointFault();
  ScopedAdjointFault(const ScopedAdjointFault&) = delete;
  ScopedAdjointFault& operator=(const ScopedAdjointFault&) = delete;
};

}  // namespace testing

}  // namespace advas
