#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "nfa/diff/parameter_set.hpp"
#include "nfa/diff/tensor.hpp"

namespace nfa::model {

enum class AdapterKind { Bottleneck, Gated };

// "ba" / "ga"
const char* to_string(AdapterKind kind);
AdapterKind parse_adapter_kind(const std::string& name);

// Hidden width of a bottleneck adapter: a quarter of the input, rounded up.
std::size_t bottleneck_hidden(std::size_t dim);
std::size_t adapter_param_count(AdapterKind kind, std::size_t dim);

// Shape-preserving block placed after a module.
//
// Bottleneck:  y = x + up(tanh(down(x))), up zero-initialized so the
//              adapter starts as the identity.
// Gated:       g = sigmoid(gate(x)),  e = expand(x),
//              y = g * x + (1 - g) * e, expand initialized to the identity
//              so y = x at start for any gate value.
class Adapter {
 public:
  static Adapter bottleneck(std::size_t dim, std::mt19937_64& rng);
  static Adapter gated(std::size_t dim, std::mt19937_64& rng);
  static Adapter make(AdapterKind kind, std::size_t dim, std::mt19937_64& rng);

  AdapterKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }

  diff::Tensor forward(const diff::Tensor& x) const;

  // Copies share parameter storage with the original.
  const diff::ParameterSet& params() const { return params_; }
  std::size_t param_count() const { return params_.count(); }

 private:
  Adapter(AdapterKind kind, std::size_t dim, std::size_t hidden)
      : kind_(kind), dim_(dim), hidden_(hidden) {}

  AdapterKind kind_;
  std::size_t dim_;
  std::size_t hidden_;
  diff::ParameterSet params_;
};

diff::Tensor adapter_forward(const Adapter& adapter, const diff::Tensor& x);

}  // namespace nfa::model
