#include "nfa/model/net_module.hpp"

#include <cmath>
#include <stdexcept>

#include "nfa/diff/ops.hpp"

namespace nfa::model {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softmax") return Activation::Softmax;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

diff::Tensor apply_activation(Activation a, const diff::Tensor& x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return diff::tanh(x);
    case Activation::Relu: return diff::relu(x);
    case Activation::Sigmoid: return diff::sigmoid(x);
    case Activation::Softmax: return diff::softmax_lastdim(x);
  }
  return x;
}

std::size_t ModuleSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) n += dims[i] * dims[i + 1] + dims[i + 1];
  return n;
}

void ModuleSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("module spec: empty name");
  if (dims.size() < 2) {
    throw std::invalid_argument("module '" + name + "': needs at least input and output dims");
  }
  for (auto d : dims) {
    if (d == 0) throw std::invalid_argument("module '" + name + "': zero-width layer");
  }
}

std::vector<AffineLayer> clone_layers(const std::vector<AffineLayer>& layers, bool trainable) {
  std::vector<AffineLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({l.weight.detach(trainable), l.bias.detach(trainable), l.activation});
  }
  return out;
}

diff::Tensor run_layers(const std::vector<AffineLayer>& layers, const diff::Tensor& x,
                        bool final_activation) {
  diff::Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    h = diff::add(diff::matmul(h, l.weight), l.bias);
    if (i + 1 < layers.size() || final_activation) h = apply_activation(l.activation, h);
  }
  return h;
}

diff::ParameterSet layer_params(const std::vector<AffineLayer>& layers) {
  diff::ParameterSet ps;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i);
    ps.add(p + ".weight", layers[i].weight);
    ps.add(p + ".bias", layers[i].bias);
  }
  return ps;
}

NetModule::NetModule(ModuleSpec spec, std::size_t stage, std::mt19937_64& rng)
    : spec_(std::move(spec)), stage_(stage) {
  spec_.validate();
  const auto& d = spec_.dims;
  for (std::size_t i = 0; i + 1 < d.size(); ++i) {
    std::normal_distribution<double> init(0.0, 1.0 / std::sqrt(static_cast<double>(d[i])));
    std::vector<double> w(d[i] * d[i + 1]);
    for (auto& v : w) v = init(rng);
    const bool last = i + 2 == d.size();
    layers_.push_back({diff::Tensor::parameter({d[i], d[i + 1]}, std::move(w)),
                       diff::Tensor::zeros({d[i + 1]}, true),
                       last ? spec_.output_activation : spec_.hidden_activation});
  }
}

diff::Tensor NetModule::forward(const diff::Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in_dim()) {
    throw std::invalid_argument("module '" + name() + "': expected (batch, " +
                                std::to_string(in_dim()) + ") input, got " +
                                diff::to_string(x.shape()));
  }
  return run_layers(layers_, x, true);
}

diff::Tensor NetModule::forward_preactivation(const diff::Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in_dim()) {
    throw std::invalid_argument("module '" + name() + "': expected (batch, " +
                                std::to_string(in_dim()) + ") input, got " +
                                diff::to_string(x.shape()));
  }
  return run_layers(layers_, x, false);
}

void NetModule::freeze() {
  for (auto& l : layers_) {
    l.weight.set_requires_grad(false);
    l.bias.set_requires_grad(false);
  }
  frozen_ = true;
}

}  // namespace nfa::model
