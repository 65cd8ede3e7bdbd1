#include "nfa/diff/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace nfa::diff {

namespace {
thread_local bool g_strict_finite = true;
}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Mul: return "mul";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::SoftmaxLastDim: return "softmax_lastdim";
    case OpKind::LogSoftmaxLastDim: return "log_softmax_lastdim";
    case OpKind::Log: return "log";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::ConcatLastDim: return "concat_lastdim";
    case OpKind::Scale: return "scale";
    case OpKind::SliceLastDim: return "slice_lastdim";
    case OpKind::StraightThrough: return "straight_through";
  }
  return "unknown";
}

std::span<double> Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

void Node::accumulate(std::span<const double> g) {
  if (!requires_grad) return;
  auto dst = ensure_grad();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

void Node::accumulate_at(std::size_t i, double g) {
  if (!requires_grad) return;
  ensure_grad()[i] += g;
}

namespace {

Tensor make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw std::invalid_argument("leaf: shape " + to_string(shape) + " holds " +
                                std::to_string(numel(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

const Node& deref(const std::shared_ptr<Node>& n) {
  if (!n) throw std::logic_error("use of an undefined tensor");
  return *n;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return make_leaf(std::move(shape), std::move(values), false);
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return make_leaf(std::move(shape), std::move(values), true);
}

Tensor Tensor::scalar(double v) { return make_leaf({}, {v}, false); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = diff::numel(shape);
  return make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

const Shape& Tensor::shape() const { return deref(node_).shape; }
std::size_t Tensor::numel() const { return deref(node_).value.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " +
                            to_string(s));
  }
  return s[axis];
}

OpKind Tensor::op() const { return deref(node_).op; }
bool Tensor::requires_grad() const { return deref(node_).requires_grad; }
bool Tensor::is_leaf() const { return deref(node_).op == OpKind::Leaf; }
std::span<const double> Tensor::value() const { return deref(node_).value; }

std::span<double> Tensor::mutable_value() {
  if (!is_leaf()) throw std::logic_error("mutable_value() on a non-leaf tensor");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + to_string(shape()));
  }
  return value()[0];
}

bool Tensor::has_grad() const { return !deref(node_).grad.empty(); }
std::span<const double> Tensor::grad() const { return deref(node_).grad; }

void Tensor::zero_grad() {
  auto& g = node_->grad;
  std::fill(g.begin(), g.end(), 0.0);
}

void Tensor::set_requires_grad(bool flag) {
  if (!is_leaf()) throw std::logic_error("set_requires_grad() on a non-leaf tensor");
  node_->requires_grad = flag;
  if (!flag) node_->grad.clear();
}

std::size_t Tensor::backward_visits() const { return deref(node_).backward_visits; }

Tensor Tensor::detach(bool requires_grad) const {
  const auto& n = deref(node_);
  return make_leaf(n.shape, n.value, requires_grad);
}

bool strict_finite() { return g_strict_finite; }
void set_strict_finite(bool strict) { g_strict_finite = strict; }

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined loss");
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative DFS post-order; 1 = on stack, 2 = finished.
  std::vector<Node*> order;
  std::unordered_map<Node*, int> state;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* root = loss.node().get();
  stack.emplace_back(root, 0);
  state[root] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (!child->requires_grad) continue;
      auto it = state.find(child);
      if (it == state.end()) {
        state[child] = 1;
        stack.emplace_back(child, 0);
      } else if (it->second == 1) {
        throw std::logic_error("backward: cycle detected in computation graph");
      }
    } else {
      state[node] = 2;
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->op != OpKind::Leaf) {
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  root->ensure_grad()[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->op == OpKind::Leaf) continue;
    ++n->backward_visits;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace nfa::diff
