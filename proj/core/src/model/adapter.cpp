#include "nfa/model/adapter.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nfa/diff/ops.hpp"

namespace nfa::model {

const char* to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::Bottleneck: return "ba";
    case AdapterKind::Gated: return "ga";
  }
  return "unknown";
}

AdapterKind parse_adapter_kind(const std::string& name) {
  if (name == "ba") return AdapterKind::Bottleneck;
  if (name == "ga") return AdapterKind::Gated;
  throw std::invalid_argument("unknown adapter kind '" + name + "' (expected ba or ga)");
}

std::size_t bottleneck_hidden(std::size_t dim) { return (dim + 3) / 4; }

std::size_t adapter_param_count(AdapterKind kind, std::size_t dim) {
  if (kind == AdapterKind::Bottleneck) {
    const std::size_t h = bottleneck_hidden(dim);
    return dim * h + h + h * dim + dim;
  }
  return 2 * (dim * dim + dim);
}

namespace {

diff::Tensor random_matrix(std::size_t rows, std::size_t cols, double stddev,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> init(0.0, stddev);
  std::vector<double> w(rows * cols);
  for (auto& v : w) v = init(rng);
  return diff::Tensor::parameter({rows, cols}, std::move(w));
}

}  // namespace

Adapter Adapter::bottleneck(std::size_t dim, std::mt19937_64& rng) {
  if (dim == 0) throw std::invalid_argument("bottleneck adapter: zero width");
  Adapter a(AdapterKind::Bottleneck, dim, bottleneck_hidden(dim));
  a.params_.add("down.weight",
                random_matrix(dim, a.hidden_, 1.0 / std::sqrt(static_cast<double>(dim)), rng));
  a.params_.add("down.bias", diff::Tensor::zeros({a.hidden_}, true));
  a.params_.add("up.weight", diff::Tensor::zeros({a.hidden_, dim}, true));
  a.params_.add("up.bias", diff::Tensor::zeros({dim}, true));
  return a;
}

Adapter Adapter::gated(std::size_t dim, std::mt19937_64& rng) {
  if (dim == 0) throw std::invalid_argument("gated adapter: zero width");
  Adapter a(AdapterKind::Gated, dim, dim);
  a.params_.add("gate.weight",
                random_matrix(dim, dim, 0.1 / std::sqrt(static_cast<double>(dim)), rng));
  a.params_.add("gate.bias", diff::Tensor::zeros({dim}, true));
  std::vector<double> eye(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) eye[i * dim + i] = 1.0;
  a.params_.add("expand.weight", diff::Tensor::parameter({dim, dim}, std::move(eye)));
  a.params_.add("expand.bias", diff::Tensor::zeros({dim}, true));
  return a;
}

Adapter Adapter::make(AdapterKind kind, std::size_t dim, std::mt19937_64& rng) {
  return kind == AdapterKind::Bottleneck ? bottleneck(dim, rng) : gated(dim, rng);
}

diff::Tensor Adapter::forward(const diff::Tensor& x) const {
  if (x.rank() == 0 || x.shape().back() != dim_) {
    throw std::invalid_argument(std::string("adapter ") + to_string(kind_) + ": expected last dim " +
                                std::to_string(dim_) + ", got " + diff::to_string(x.shape()));
  }
  using namespace diff;
  if (kind_ == AdapterKind::Bottleneck) {
    Tensor h = tanh(add(matmul(x, params_.at("down.weight")), params_.at("down.bias")));
    Tensor up = add(matmul(h, params_.at("up.weight")), params_.at("up.bias"));
    return add(x, up);
  }
  Tensor g = sigmoid(add(matmul(x, params_.at("gate.weight")), params_.at("gate.bias")));
  Tensor e = add(matmul(x, params_.at("expand.weight")), params_.at("expand.bias"));
  // g*x + (1-g)*e == e + g*(x - e)
  return add(e, mul(g, sub(x, e)));
}

diff::Tensor adapter_forward(const Adapter& adapter, const diff::Tensor& x) {
  return adapter.forward(x);
}

}  // namespace nfa::model
