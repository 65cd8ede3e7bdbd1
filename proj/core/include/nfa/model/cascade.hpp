#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nfa/data/dataset.hpp"
#include "nfa/model/net_module.hpp"

namespace nfa::model {

struct StageSpec {
  std::string name;
  std::vector<ModuleSpec> modules;
};

// Stages in series; stage k's output feeds stage k+1. The final module emits
// logits over `num_labels` classes.
struct CascadeSpec {
  std::vector<StageSpec> stages;
  std::size_t num_labels = 8;

  std::size_t input_dim() const;
  std::size_t module_count() const;
  // Throws std::invalid_argument naming the first inconsistency.
  void validate() const;

  // 3 stages x 2 modules, widths 16 -> 16 -> 16 -> 8.
  static CascadeSpec toy();
  // 3 stages x 1 module, same widths.
  static CascadeSpec toy_three_cell();
};

using ModuleList = std::vector<std::shared_ptr<NetModule>>;

// Seeded construction in cascade order.
ModuleList build_cascade(const CascadeSpec& spec, std::uint64_t seed);

// Plain forward through every module with its own weights.
diff::Tensor cascade_forward(const ModuleList& modules, const diff::Tensor& x);

struct PretrainConfig {
  std::size_t epochs = 20;
  double lr = 1e-2;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct StagePretrainLoss {
  std::size_t stage = 0;
  double initial = 0.0;
  double final = 0.0;
};

// Trains every stage except the last on the source-domain data, one stage at
// a time with earlier stages frozen: the first stage regresses the clean
// signal, later upstream stages classify the auxiliary token. The final stage
// keeps its random initialization. All modules are frozen on return.
std::vector<StagePretrainLoss> pretrain_upstream(ModuleList& modules,
                                                 const data::Dataset& source,
                                                 const PretrainConfig& cfg);

// Loss the given upstream stage is pretrained on, evaluated on `data`.
double upstream_stage_loss(const ModuleList& modules, std::size_t stage,
                           const data::Dataset& data);

}  // namespace nfa::model
