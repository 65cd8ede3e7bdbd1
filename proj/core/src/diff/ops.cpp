#include "nfa/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nfa::diff {

namespace {

[[noreturn]] void shape_error(OpKind kind, const std::string& detail) {
  throw std::invalid_argument(std::string(to_string(kind)) + ": " + detail);
}

void check_finite(OpKind kind, std::span<const double> v, const char* what) {
  if (!strict_finite()) return;
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::domain_error(std::string(to_string(kind)) + ": non-finite " + what +
                              " value (strict mode)");
    }
  }
}

Tensor make_node(OpKind kind, Shape shape, std::vector<double> value,
                 std::vector<Tensor> inputs, std::function<void(Node&)> backward_fn) {
  for (const auto& in : inputs) check_finite(kind, in.value(), "input");
  check_finite(kind, value, "output");
  auto node = std::make_shared<Node>();
  node->op = kind;
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs_grad = false;
  node->inputs.reserve(inputs.size());
  for (auto& in : inputs) {
    needs_grad = needs_grad || in.requires_grad();
    node->inputs.push_back(in.node());
  }
  node->requires_grad = needs_grad;
  if (needs_grad) node->backward_fn = std::move(backward_fn);
  return Tensor(std::move(node));
}

// Row view along the last axis: rows() x cols().
struct RowLayout {
  std::size_t rows;
  std::size_t cols;
};

RowLayout row_layout(OpKind kind, const Tensor& x) {
  if (x.rank() == 0) shape_error(kind, "needs rank >= 1, got a scalar");
  std::size_t cols = x.shape().back();
  if (cols == 0) shape_error(kind, "empty last dimension in " + to_string(x.shape()));
  return {x.numel() / cols, cols};
}

enum class Broadcast { Same, Batch, Scalar };

Broadcast broadcast_rule(OpKind kind, const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa == sb) return Broadcast::Same;
  if (b.numel() == 1 && sb.size() <= 1) return Broadcast::Scalar;
  if (sa.size() == sb.size() + 1 && std::equal(sb.begin(), sb.end(), sa.begin() + 1)) {
    return Broadcast::Batch;
  }
  shape_error(kind, "cannot broadcast " + to_string(sb) + " onto " + to_string(sa));
}

std::size_t b_index(Broadcast rule, std::size_t i, std::size_t b_size) {
  switch (rule) {
    case Broadcast::Same: return i;
    case Broadcast::Batch: return i % b_size;
    case Broadcast::Scalar: return 0;
  }
  return 0;
}

template <typename F, typename DF>
Tensor unary(OpKind kind, const Tensor& x, F f, DF df_from_xy) {
  std::vector<double> y(x.numel());
  auto xv = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return make_node(kind, x.shape(), std::move(y), {x}, [df_from_xy](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * df_from_xy(in.value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    shape_error(OpKind::MatMul, "operands must be rank 2, got " + to_string(a.shape()) +
                                    " and " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    shape_error(OpKind::MatMul, "inner dimensions differ: " + to_string(a.shape()) + " x " +
                                    to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  auto av = a.value();
  auto bv = b.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_node(OpKind::MatMul, {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const auto& g = self.grad;
    if (na.requires_grad) {
      auto ga = na.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * nb.value[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (nb.requires_grad) {
      auto gb = nb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = na.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto rule = broadcast_rule(OpKind::Add, a, b);
  const std::size_t bn = b.numel();
  std::vector<double> out(a.numel());
  auto av = a.value();
  auto bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[b_index(rule, i, bn)];
  return make_node(OpKind::Add, a.shape(), std::move(out), {a, b}, [rule, bn](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    if (na.requires_grad) na.accumulate(self.grad);
    if (nb.requires_grad) {
      auto gb = nb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[b_index(rule, i, bn)] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto rule = broadcast_rule(OpKind::Mul, a, b);
  const std::size_t bn = b.numel();
  std::vector<double> out(a.numel());
  auto av = a.value();
  auto bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[b_index(rule, i, bn)];
  return make_node(OpKind::Mul, a.shape(), std::move(out), {a, b}, [rule, bn](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    if (na.requires_grad) {
      auto ga = na.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i)
        ga[i] += self.grad[i] * nb.value[b_index(rule, i, bn)];
    }
    if (nb.requires_grad) {
      auto gb = nb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        gb[b_index(rule, i, bn)] += self.grad[i] * na.value[i];
    }
  });
}

Tensor relu(const Tensor& x) {
  return unary(
      OpKind::Relu, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      OpKind::Tanh, x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      OpKind::Sigmoid, x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& x) {
  return unary(
      OpKind::Log, x, [](double v) { return std::log(v); },
      [](double in, double) { return 1.0 / in; });
}

Tensor softmax_lastdim(const Tensor& x) {
  const auto [rows, cols] = row_layout(OpKind::SoftmaxLastDim, x);
  auto xv = x.value();
  std::vector<double> y(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &xv[r * cols];
    double* out = &y[r * cols];
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (out[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) out[c] /= z;
  }
  return make_node(OpKind::SoftmaxLastDim, x.shape(), std::move(y), {x},
                   [rows, cols](Node& self) {
                     Node& in = *self.inputs[0];
                     auto g = in.ensure_grad();
                     for (std::size_t r = 0; r < rows; ++r) {
                       const double* yv = &self.value[r * cols];
                       const double* gy = &self.grad[r * cols];
                       double dot = 0.0;
                       for (std::size_t c = 0; c < cols; ++c) dot += gy[c] * yv[c];
                       for (std::size_t c = 0; c < cols; ++c)
                         g[r * cols + c] += yv[c] * (gy[c] - dot);
                     }
                   });
}

Tensor log_softmax_lastdim(const Tensor& x) {
  const auto [rows, cols] = row_layout(OpKind::LogSoftmaxLastDim, x);
  auto xv = x.value();
  std::vector<double> y(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &xv[r * cols];
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(in[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = in[c] - lse;
  }
  return make_node(OpKind::LogSoftmaxLastDim, x.shape(), std::move(y), {x},
                   [rows, cols](Node& self) {
                     Node& in = *self.inputs[0];
                     auto g = in.ensure_grad();
                     for (std::size_t r = 0; r < rows; ++r) {
                       const double* gy = &self.grad[r * cols];
                       double total = 0.0;
                       for (std::size_t c = 0; c < cols; ++c) total += gy[c];
                       for (std::size_t c = 0; c < cols; ++c)
                         g[r * cols + c] += gy[c] - std::exp(self.value[r * cols + c]) * total;
                     }
                   });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.value()) s += v;
  return make_node(OpKind::Sum, {}, {s}, {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto g = in.ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) shape_error(OpKind::Mean, "empty tensor");
  double s = 0.0;
  for (double v : x.value()) s += v;
  const double n = static_cast<double>(x.numel());
  return make_node(OpKind::Mean, {}, {s / n}, {x}, [n](Node& self) {
    Node& in = *self.inputs[0];
    auto g = in.ensure_grad();
    for (auto& gi : g) gi += self.grad[0] / n;
  });
}

Tensor concat_lastdim(std::span<const Tensor> parts) {
  if (parts.empty()) shape_error(OpKind::ConcatLastDim, "no inputs");
  const Shape& first = parts[0].shape();
  if (first.empty()) shape_error(OpKind::ConcatLastDim, "scalar input");
  Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      shape_error(OpKind::ConcatLastDim,
                  "leading dims differ: " + to_string(first) + " vs " + to_string(s));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = numel(lead);
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(&v[r * widths[k]], widths[k], &out[r * total + offset]);
    offset += widths[k];
  }
  Shape shape = lead;
  shape.push_back(total);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_node(OpKind::ConcatLastDim, std::move(shape), std::move(out), std::move(inputs),
                   [widths, rows, total](Node& self) {
                     std::size_t off = 0;
                     for (std::size_t k = 0; k < widths.size(); ++k) {
                       Node& in = *self.inputs[k];
                       if (in.requires_grad) {
                         auto g = in.ensure_grad();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < widths[k]; ++c)
                             g[r * widths[k] + c] += self.grad[r * total + off + c];
                       }
                       off += widths[k];
                     }
                   });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.numel());
  auto xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  return make_node(OpKind::Scale, x.shape(), std::move(out), {x}, [factor](Node& self) {
    Node& in = *self.inputs[0];
    auto g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor slice_lastdim(const Tensor& x, std::size_t begin, std::size_t end) {
  const auto [rows, cols] = row_layout(OpKind::SliceLastDim, x);
  if (begin >= end || end > cols) {
    shape_error(OpKind::SliceLastDim, "range [" + std::to_string(begin) + "," +
                                          std::to_string(end) + ") invalid for " +
                                          to_string(x.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  auto xv = x.value();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(&xv[r * cols + begin], w, &out[r * w]);
  Shape shape = x.shape();
  shape.back() = w;
  return make_node(OpKind::SliceLastDim, std::move(shape), std::move(out), {x},
                   [rows = rows, cols = cols, begin, w](Node& self) {
                     Node& in = *self.inputs[0];
                     auto g = in.ensure_grad();
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t c = 0; c < w; ++c)
                         g[r * cols + begin + c] += self.grad[r * w + c];
                   });
}

Tensor straight_through(const Tensor& soft) {
  const auto [rows, cols] = row_layout(OpKind::StraightThrough, soft);
  auto sv = soft.value();
  std::vector<double> out(soft.numel(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &sv[r * cols];
    const auto best = static_cast<std::size_t>(std::max_element(row, row + cols) - row);
    out[r * cols + best] = 1.0;
  }
  return make_node(OpKind::StraightThrough, soft.shape(), std::move(out), {soft},
                   [](Node& self) { self.inputs[0]->accumulate(self.grad); });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor forward_op(OpKind kind, std::span<const Tensor> inputs, const OpAttributes& attrs) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n) {
      shape_error(kind, "expects " + std::to_string(n) + " input(s), got " +
                            std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::MatMul: need(2); return matmul(inputs[0], inputs[1]);
    case OpKind::Add: need(2); return add(inputs[0], inputs[1]);
    case OpKind::Mul: need(2); return mul(inputs[0], inputs[1]);
    case OpKind::Relu: need(1); return relu(inputs[0]);
    case OpKind::Tanh: need(1); return tanh(inputs[0]);
    case OpKind::Sigmoid: need(1); return sigmoid(inputs[0]);
    case OpKind::SoftmaxLastDim: need(1); return softmax_lastdim(inputs[0]);
    case OpKind::LogSoftmaxLastDim: need(1); return log_softmax_lastdim(inputs[0]);
    case OpKind::Log: need(1); return log(inputs[0]);
    case OpKind::Sum: need(1); return sum(inputs[0]);
    case OpKind::Mean: need(1); return mean(inputs[0]);
    case OpKind::ConcatLastDim: return concat_lastdim(inputs);
    case OpKind::Scale: need(1); return scale(inputs[0], attrs.factor);
    case OpKind::SliceLastDim: need(1); return slice_lastdim(inputs[0], attrs.begin, attrs.end);
    case OpKind::StraightThrough: need(1); return straight_through(inputs[0]);
    case OpKind::Leaf: break;
  }
  shape_error(kind, "not a forward op");
}

}  // namespace nfa::diff
