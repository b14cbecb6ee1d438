#include "advas/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace advas {

namespace {

std::atomic<int> g_adjoint_fault{-1};

std::string_view kOpNames[] = {
    "leaf", "constant", "add", "sub", "mul", "div", "neg", "scale", "add-scalar", "matmul",
    "affine", "transpose", "relu", "leaky-relu", "sigmoid", "tanh", "log", "sqrt", "square",
    "sum", "mean", "sum-to", "clamp-min", "clamp-max", "l2norm-squared", "broadcast", "reshape",
    "concat", "slice", "pad",
};

struct NodeAttrs {
  double scalar = 0.0;
  Shape shape;
  std::size_t offset = 0;
  std::size_t length = 0;
};

Var make_node(OpKind kind, Tensor value, std::vector<Var> parents, NodeAttrs attrs = {}) {
  if (!value.all_finite()) {
    throw NonFiniteError(std::string("non-finite value produced by ") + std::string(op_name(kind)) +
                         " with output shape " + shape_to_string(value.shape()));
  }
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->value = std::make_shared<const Tensor>(std::move(value));
  node->requires_grad = std::any_of(parents.begin(), parents.end(),
                                    [](const Var& p) { return p.requires_grad(); });
  // History is only kept where a gradient could flow.
  if (node->requires_grad) node->parents = std::move(parents);
  node->scalar = attrs.scalar;
  node->attr_shape = std::move(attrs.shape);
  node->offset = attrs.offset;
  node->length = attrs.length;
  return Var(std::move(node));
}

void require_same_shape(const Var& a, const Var& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

template <typename F>
Tensor map_unary(const Tensor& x, F f) {
  Tensor out = x;
  for (double& v : out.data()) v = f(v);
  return out;
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
  Tensor out = a;
  auto od = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = f(od[i], bd[i]);
  return out;
}

void require_matrix(const Var& x, std::string_view op) {
  if (x.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(x.shape()));
  }
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c = Tensor::zeros({m, n});
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* cd = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = cd + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bd + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

enum class Expansion { kSame, kScalar, kRows, kCols };

// How `small` expands to `big`, or throws.
Expansion classify_expansion(const Shape& small, const Shape& big, std::string_view op) {
  if (small == big) return Expansion::kSame;
  if (shape_numel(small) == 1) return Expansion::kScalar;
  if (big.size() == 2) {
    const bool row = (small.size() == 1 && small[0] == big[1]) ||
                     (small.size() == 2 && small[0] == 1 && small[1] == big[1]);
    if (row) return Expansion::kRows;
    if (small.size() == 2 && small[1] == 1 && small[0] == big[0]) return Expansion::kCols;
  }
  throw ShapeError(std::string(op) + ": cannot relate " + shape_to_string(small) + " and " +
                   shape_to_string(big));
}

Tensor broadcast_values(const Tensor& x, const Shape& target, Expansion how) {
  switch (how) {
    case Expansion::kSame:
      return x;
    case Expansion::kScalar:
      return Tensor::full(target, x[0]);
    case Expansion::kRows: {
      Tensor out = Tensor::zeros(target);
      const std::size_t m = target[0], n = target[1];
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[j];
      return out;
    }
    case Expansion::kCols: {
      Tensor out = Tensor::zeros(target);
      const std::size_t m = target[0], n = target[1];
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i];
      return out;
    }
  }
  return x;
}

Tensor sum_to_values(const Tensor& x, const Shape& target, Expansion how) {
  switch (how) {
    case Expansion::kSame:
      return x;
    case Expansion::kScalar: {
      double s = 0.0;
      for (double v : x.data()) s += v;
      return Tensor(target, {s});
    }
    case Expansion::kRows: {
      Tensor out = Tensor::zeros(target);
      const std::size_t m = x.shape()[0], n = x.shape()[1];
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += x[i * n + j];
      return out;
    }
    case Expansion::kCols: {
      Tensor out = Tensor::zeros(target);
      const std::size_t m = x.shape()[0], n = x.shape()[1];
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += x[i * n + j];
        out[i] = s;
      }
      return out;
    }
  }
  return x;
}

Var mask_constant(const Tensor& x, double below, double above, double threshold, bool strict_above) {
  return Var::constant(map_unary(x, [=](double v) {
    const bool hi = strict_above ? v > threshold : v >= threshold;
    return hi ? above : below;
  }));
}

// Adjoint of one node. `p(i)` and `self` are either the live graph or detached
// copies, depending on whether the caller asked for a differentiable result.
std::vector<Var> adjoint(const Node& node, const Var& self, const Var& g,
                         const std::vector<Var>& p) {
  const auto& x = p.empty() ? self : p[0];
  switch (node.kind) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
      return {};
    case OpKind::kAdd:
      return {g, g};
    case OpKind::kSub:
      return {g, neg(g)};
    case OpKind::kMul:
      return {mul(g, p[1]), mul(g, p[0])};
    case OpKind::kDiv:
      return {div(g, p[1]), neg(div(mul(g, self), p[1]))};
    case OpKind::kNeg:
      return {neg(g)};
    case OpKind::kScale:
      return {scale(g, node.scalar)};
    case OpKind::kAddScalar:
      return {g};
    case OpKind::kMatMul:
      return {matmul(g, transpose(p[1])), matmul(transpose(p[0]), g)};
    case OpKind::kAffine:
      return {matmul(g, transpose(p[1])), matmul(transpose(p[0]), g), sum_to(g, p[2].shape())};
    case OpKind::kTranspose:
      return {transpose(g)};
    case OpKind::kRelu:
      return {mul(g, mask_constant(x.value(), 0.0, 1.0, 0.0, true))};
    case OpKind::kLeakyRelu:
      return {mul(g, mask_constant(x.value(), node.scalar, 1.0, 0.0, true))};
    case OpKind::kSigmoid:
      return {mul(g, sub(self, square(self)))};
    case OpKind::kTanh:
      return {sub(g, mul(g, square(self)))};
    case OpKind::kLog:
      return {div(g, x)};
    case OpKind::kSqrt:
      return {div(scale(g, 0.5), self)};
    case OpKind::kSquare:
      return {scale(mul(g, x), 2.0)};
    case OpKind::kSum:
    case OpKind::kSumTo:
      return {broadcast(g, x.shape())};
    case OpKind::kMean:
      return {scale(broadcast(g, x.shape()), 1.0 / static_cast<double>(x.numel()))};
    case OpKind::kClampMin:
      return {mul(g, mask_constant(x.value(), 0.0, 1.0, node.scalar, true))};
    case OpKind::kClampMax:
      return {mul(g, mask_constant(x.value(), 1.0, 0.0, node.scalar, false))};
    case OpKind::kL2NormSquared:
      return {scale(mul(broadcast(g, x.shape()), x), 2.0)};
    case OpKind::kBroadcast:
      return {sum_to(g, x.shape())};
    case OpKind::kReshape:
      return {reshape(g, x.shape())};
    case OpKind::kConcat: {
      std::vector<Var> out;
      std::size_t offset = 0;
      for (const auto& parent : p) {
        out.push_back(reshape(slice(g, offset, parent.numel()), parent.shape()));
        offset += parent.numel();
      }
      return out;
    }
    case OpKind::kSlice:
      return {reshape(pad(g, node.offset, x.numel()), x.shape())};
    case OpKind::kPad:
      return {reshape(slice(g, node.offset, x.numel()), x.shape())};
  }
  return {};
}

}  // namespace

std::string_view op_name(OpKind kind) { return kOpNames[static_cast<int>(kind)]; }

Var Var::leaf(Tensor value) {
  if (!value.all_finite()) throw NonFiniteError("non-finite leaf value");
  auto node = std::make_shared<Node>();
  node->kind = OpKind::kLeaf;
  node->value = std::make_shared<const Tensor>(std::move(value));
  node->requires_grad = true;
  return Var(std::move(node));
}

Var Var::constant(Tensor value) {
  if (!value.all_finite()) throw NonFiniteError("non-finite constant value");
  auto node = std::make_shared<Node>();
  node->kind = OpKind::kConstant;
  node->value = std::make_shared<const Tensor>(std::move(value));
  return Var(std::move(node));
}

const Tensor& Var::value() const { return *node_->value; }
OpKind Var::kind() const { return node_->kind; }
bool Var::requires_grad() const { return node_->requires_grad; }

Var detach(const Var& x) {
  if (!x.requires_grad()) return x;
  auto node = std::make_shared<Node>();
  node->kind = OpKind::kConstant;
  node->value = x.node()->value;
  return Var(std::move(node));
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make_node(OpKind::kAdd, map_binary(a.value(), b.value(), std::plus<>()), {a, b});
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make_node(OpKind::kSub, map_binary(a.value(), b.value(), std::minus<>()), {a, b});
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make_node(OpKind::kMul, map_binary(a.value(), b.value(), std::multiplies<>()), {a, b});
}

Var div(const Var& a, const Var& b) {
  require_same_shape(a, b, "div");
  return make_node(OpKind::kDiv, map_binary(a.value(), b.value(), std::divides<>()), {a, b});
}

Var neg(const Var& x) { return make_node(OpKind::kNeg, map_unary(x.value(), std::negate<>()), {x}); }

Var scale(const Var& x, double c) {
  return make_node(OpKind::kScale, map_unary(x.value(), [c](double v) { return c * v; }), {x},
                   {.scalar = c});
}

Var add_scalar(const Var& x, double c) {
  return make_node(OpKind::kAddScalar, map_unary(x.value(), [c](double v) { return v + c; }), {x},
                   {.scalar = c});
}

Var relu(const Var& x) {
  return make_node(OpKind::kRelu, map_unary(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }),
                   {x});
}

Var leaky_relu(const Var& x, double slope) {
  return make_node(OpKind::kLeakyRelu,
                   map_unary(x.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }), {x},
                   {.scalar = slope});
}

Var sigmoid(const Var& x) {
  return make_node(OpKind::kSigmoid, map_unary(x.value(), [](double v) {
                     if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                     const double e = std::exp(v);
                     return e / (1.0 + e);
                   }),
                   {x});
}

Var tanh(const Var& x) {
  return make_node(OpKind::kTanh, map_unary(x.value(), [](double v) { return std::tanh(v); }), {x});
}

Var log(const Var& x) {
  return make_node(OpKind::kLog, map_unary(x.value(), [](double v) { return std::log(v); }), {x});
}

Var sqrt(const Var& x) {
  return make_node(OpKind::kSqrt, map_unary(x.value(), [](double v) { return std::sqrt(v); }), {x});
}

Var square(const Var& x) {
  return make_node(OpKind::kSquare, map_unary(x.value(), [](double v) { return v * v; }), {x});
}

Var clamp_min(const Var& x, double c) {
  return make_node(OpKind::kClampMin, map_unary(x.value(), [c](double v) { return std::max(v, c); }),
                   {x}, {.scalar = c});
}

Var clamp_max(const Var& x, double c) {
  return make_node(OpKind::kClampMax, map_unary(x.value(), [c](double v) { return std::min(v, c); }),
                   {x}, {.scalar = c});
}

Var matmul(const Var& a, const Var& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  return make_node(OpKind::kMatMul, matmul_values(a.value(), b.value()), {a, b});
}

Var affine(const Var& x, const Var& w, const Var& b) {
  require_matrix(x, "affine");
  require_matrix(w, "affine");
  if (x.shape()[1] != w.shape()[0]) {
    throw ShapeError("affine: shape mismatch " + shape_to_string(x.shape()) + " vs " +
                     shape_to_string(w.shape()));
  }
  Tensor out = matmul_values(x.value(), w.value());
  const auto how = classify_expansion(b.shape(), out.shape(), "affine bias");
  if (how != Expansion::kRows && how != Expansion::kSame &&
      !(how == Expansion::kScalar && out.shape()[1] == 1)) {
    throw ShapeError("affine: bias " + shape_to_string(b.shape()) + " does not match output " +
                     shape_to_string(out.shape()));
  }
  const Tensor bias = broadcast_values(b.value(), out.shape(), how);
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bias[i];
  return make_node(OpKind::kAffine, std::move(out), {x, w, b});
}

Var transpose(const Var& x) {
  require_matrix(x, "transpose");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  Tensor out = Tensor::zeros({n, m});
  const auto& v = x.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = v[i * n + j];
  return make_node(OpKind::kTranspose, std::move(out), {x});
}

Var sum(const Var& x) {
  return make_node(OpKind::kSum, sum_to_values(x.value(), {}, Expansion::kScalar), {x});
}

Var mean(const Var& x) {
  Tensor s = sum_to_values(x.value(), {}, Expansion::kScalar);
  s[0] /= static_cast<double>(x.numel());
  return make_node(OpKind::kMean, std::move(s), {x});
}

Var l2norm_squared(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v * v;
  return make_node(OpKind::kL2NormSquared, Tensor::scalar(s), {x});
}

Var sum_to(const Var& x, const Shape& target) {
  const auto how = classify_expansion(target, x.shape(), "sum_to");
  if (how == Expansion::kSame) return x;
  return make_node(OpKind::kSumTo, sum_to_values(x.value(), target, how), {x}, {.shape = target});
}

Var sum_rows(const Var& x) {
  require_matrix(x, "sum_rows");
  return sum_to(x, {x.shape()[0], 1});
}

Var broadcast(const Var& x, const Shape& target) {
  const auto how = classify_expansion(x.shape(), target, "broadcast");
  if (how == Expansion::kSame) return x;
  return make_node(OpKind::kBroadcast, broadcast_values(x.value(), target, how), {x},
                   {.shape = target});
}

Var reshape(const Var& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  return make_node(OpKind::kReshape, x.value().reshaped(shape), {x}, {.shape = shape});
}

Var concat(std::span<const Var> xs) {
  std::vector<double> data;
  for (const auto& x : xs) data.insert(data.end(), x.value().data().begin(), x.value().data().end());
  const std::size_t n = data.size();
  return make_node(OpKind::kConcat, Tensor({n}, std::move(data)), std::vector<Var>(xs.begin(), xs.end()));
}

Var slice(const Var& x, std::size_t offset, std::size_t length) {
  if (offset + length > x.numel()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") exceeds " + shape_to_string(x.shape()));
  }
  auto d = x.value().data();
  std::vector<double> data(d.begin() + static_cast<std::ptrdiff_t>(offset),
                           d.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return make_node(OpKind::kSlice, Tensor({length}, std::move(data)), {x},
                   {.offset = offset, .length = length});
}

Var pad(const Var& x, std::size_t offset, std::size_t total) {
  if (offset + x.numel() > total) {
    throw ShapeError("pad: " + shape_to_string(x.shape()) + " at offset " + std::to_string(offset) +
                     " exceeds length " + std::to_string(total));
  }
  Tensor out = Tensor::zeros({total});
  auto d = x.value().data();
  std::copy(d.begin(), d.end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
  return make_node(OpKind::kPad, std::move(out), {x}, {.offset = offset, .length = total});
}

std::vector<Var> gradient(const Var& output, std::span<const Var> wrt, GradMode mode) {
  if (output.numel() != 1) {
    throw ShapeError("gradient: output must be scalar, got shape " + shape_to_string(output.shape()));
  }
  const bool create_graph = mode == GradMode::kCreateGraph;

  std::unordered_set<const Node*> targets;
  for (const auto& w : wrt) targets.insert(w.node());

  // Topological order over nodes that carry history (parents before children).
  std::vector<Var> order;
  std::unordered_map<const Node*, bool> relevant;
  if (output.requires_grad() || targets.count(output.node())) {
    std::unordered_set<const Node*> visited;
    std::vector<std::pair<Var, std::size_t>> stack;
    stack.emplace_back(output, 0);
    visited.insert(output.node());
    while (!stack.empty()) {
      auto& [var, next] = stack.back();
      const auto& parents = var.node()->parents;
      if (next < parents.size()) {
        const Var parent = parents[next++];
        if (parent.requires_grad() && visited.insert(parent.node()).second) {
          stack.emplace_back(parent, 0);
        }
        continue;
      }
      bool rel = targets.count(var.node()) > 0;
      for (const auto& parent : parents) {
        auto it = relevant.find(parent.node());
        if (it != relevant.end() && it->second) rel = true;
      }
      relevant[var.node()] = rel;
      order.push_back(var);
      stack.pop_back();
    }
  }

  const int fault = g_adjoint_fault.load();
  std::unordered_map<const Node*, Var> adjoints;
  adjoints[output.node()] = Var::constant(Tensor::full(output.shape(), 1.0));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Var& self = *it;
    const Node& node = *self.node();
    if (!relevant[&node] || node.parents.empty()) continue;
    auto found = adjoints.find(&node);
    if (found == adjoints.end()) continue;
    const Var g = create_graph ? found->second : detach(found->second);

    std::vector<Var> parents;
    parents.reserve(node.parents.size());
    for (const auto& parent : node.parents) parents.push_back(create_graph ? parent : detach(parent));
    const Var self_view = create_graph ? self : detach(self);

    auto grads = adjoint(node, self_view, g, parents);
    for (std::size_t i = 0; i < node.parents.size(); ++i) {
      const Var& parent = node.parents[i];
      auto rel = relevant.find(parent.node());
      if (rel == relevant.end() || !rel->second) continue;
      Var gi = grads[i];
      if (fault == static_cast<int>(node.kind)) gi = neg(gi);
      if (gi.shape() != parent.shape()) {
        throw ShapeError(std::string("adjoint of ") + std::string(op_name(node.kind)) + " produced " +
                         shape_to_string(gi.shape()) + " for parent " + shape_to_string(parent.shape()));
      }
      auto [slot, inserted] = adjoints.try_emplace(parent.node(), gi);
      if (!inserted) slot->second = add(slot->second, gi);
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto found = adjoints.find(w.node());
    if (found == adjoints.end()) {
      result.push_back(Var::constant(Tensor::zeros(w.shape())));
    } else {
      result.push_back(create_graph ? found->second : detach(found->second));
    }
  }
  return result;
}

std::vector<Tensor> gradient_values(const Var& output, std::span<const Var> wrt) {
  std::vector<Tensor> out;
  for (const auto& g : gradient(output, wrt, GradMode::kValueOnly)) out.push_back(g.value());
  return out;
}

std::vector<double> flatten_values(std::span<const Var> xs) {
  std::vector<double> out;
  for (const auto& x : xs) out.insert(out.end(), x.value().data().begin(), x.value().data().end());
  return out;
}

std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> x,
                                               double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be positive");
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point);
    point[i] = saved - h;
    const double down = f(point);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFiniteError("finite_difference_gradient: non-finite evaluation at coordinate " +
                           std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace testing {

ScopedAdjointFault::ScopedAdjointFault(OpKind kind) { g_adjoint_fault.store(static_cast<int>(kind)); }
ScopedAdjointFault::~ScopedAdjointFault() { g_adjoint_fault.store(-1); }

}  // namespace testing

}  // namespace advas
