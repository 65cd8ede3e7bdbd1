#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nfa::diff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

enum class OpKind {
  Leaf,
  MatMul,
  Add,
  Mul,
  Relu,
  Tanh,
  Sigmoid,
  SoftmaxLastDim,
  LogSoftmaxLastDim,
  Log,
  Sum,
  Mean,
  ConcatLastDim,
  Scale,
  SliceLastDim,
  StraightThrough,
};

const char* to_string(OpKind kind);

// One vertex of the computation graph. Leaves are parameters or constants;
// interior nodes own references to their inputs, so a graph stays alive for
// as long as its output does.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is accumulated
  OpKind op = OpKind::Leaf;
  std::vector<std::shared_ptr<Node>> inputs;
  bool requires_grad = false;
  std::function<void(Node&)> backward_fn;
  std::size_t backward_visits = 0;

  // Adds `g` into this node's gradient, allocating storage on first use.
  // No-op for nodes that do not require gradients.
  void accumulate(std::span<const double> g);
  void accumulate_at(std::size_t i, double g);
  std::span<double> ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor zeros(Shape shape, bool requires_grad = false);

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;
  OpKind op() const;
  bool requires_grad() const;
  bool is_leaf() const;

  std::span<const double> value() const;
  // Only leaves may be mutated in place; interior values are derived.
  std::span<double> mutable_value();
  double item() const;
  double at(std::size_t i) const { return value()[i]; }

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();
  // Leaf-only toggle used when a pretrained module is frozen.
  void set_requires_grad(bool flag);

  std::size_t backward_visits() const;

  // Copy of the value in a fresh leaf; never shares storage.
  Tensor detach(bool requires_grad = false) const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Non-finite checking. Strict (the default) raises std::domain_error when an
// op sees or produces NaN/Inf; permissive lets them propagate. The flag is
// per thread.
bool strict_finite();
void set_strict_finite(bool strict);

class FiniteModeScope {
 public:
  explicit FiniteModeScope(bool strict) : previous_(strict_finite()) {
    set_strict_finite(strict);
  }
  ~FiniteModeScope() { set_strict_finite(previous_); }
  FiniteModeScope(const FiniteModeScope&) = delete;
  FiniteModeScope& operator=(const FiniteModeScope&) = delete;

 private:
  bool previous_;
};

// Runs reverse accumulation from a scalar loss. Leaf gradients accumulate
// across calls; interior gradients are reset at the start of each call.
void backward(const Tensor& loss);

}  // namespace nfa::diff
