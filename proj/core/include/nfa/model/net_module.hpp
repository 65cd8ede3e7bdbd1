#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nfa/diff/parameter_set.hpp"
#include "nfa/diff/tensor.hpp"

namespace nfa::model {

enum class Activation { Identity, Tanh, Relu, Sigmoid, Softmax };

const char* to_string(Activation a);
Activation parse_activation(const std::string& name);
diff::Tensor apply_activation(Activation a, const diff::Tensor& x);

struct ModuleSpec {
  std::string name;
  // Layer widths: dims[0] is the input, dims.back() the output; one affine
  // layer per consecutive pair.
  std::vector<std::size_t> dims;
  Activation hidden_activation = Activation::Tanh;
  Activation output_activation = Activation::Tanh;

  std::size_t in_dim() const { return dims.front(); }
  std::size_t out_dim() const { return dims.back(); }
  std::size_t param_count() const;
  void validate() const;
};

struct AffineLayer {
  diff::Tensor weight;  // (in, out)
  diff::Tensor bias;    // (out)
  Activation activation = Activation::Identity;
};

std::vector<AffineLayer> clone_layers(const std::vector<AffineLayer>& layers, bool trainable);
// Runs x through the layers; the last layer's activation is skipped when
// `final_activation` is false.
diff::Tensor run_layers(const std::vector<AffineLayer>& layers, const diff::Tensor& x,
                        bool final_activation = true);
diff::ParameterSet layer_params(const std::vector<AffineLayer>& layers);

// One searchable unit of a cascade: a short stack of affine layers holding
// pretrained weights. Trainable until freeze(); immutable afterward.
class NetModule {
 public:
  NetModule(ModuleSpec spec, std::size_t stage, std::mt19937_64& rng);

  const std::string& name() const { return spec_.name; }
  const ModuleSpec& spec() const { return spec_; }
  std::size_t stage() const { return stage_; }
  std::size_t in_dim() const { return spec_.in_dim(); }
  std::size_t out_dim() const { return spec_.out_dim(); }

  diff::Tensor forward(const diff::Tensor& x) const;
  diff::Tensor forward_preactivation(const diff::Tensor& x) const;

  const std::vector<AffineLayer>& layers() const { return layers_; }
  diff::ParameterSet pretrained_params() const { return layer_params(layers_); }
  std::size_t param_count() const { return spec_.param_count(); }
  std::uint64_t checksum() const { return pretrained_params().checksum(); }

  void freeze();
  bool frozen() const { return frozen_; }

 private:
  ModuleSpec spec_;
  std::size_t stage_;
  std::vector<AffineLayer> layers_;
  bool frozen_ = false;
};

}  // namespace nfa::model
