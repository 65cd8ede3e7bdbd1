#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nfa/diff/parameter_set.hpp"
#include "nfa/diff/tensor.hpp"
#include "nfa/model/adapter.hpp"
#include "nfa/model/net_module.hpp"
#include "nfa/objective/penalty_config.hpp"

namespace nfa::cell {

// NA: frozen backbone, paths {skip, adapter}.
// NFA: paths {frozen, fine-tune, adapter...}.
enum class CellMode { NA, NFA };
enum class PathKind { Frozen, FineTune, Adapter };

const char* to_string(CellMode mode);
CellMode parse_cell_mode(const std::string& name);

struct CandidatePath {
  PathKind kind = PathKind::Frozen;
  std::optional<model::Adapter> adapter;

  // "frozen", "finetune", "adapter:ba", ...
  std::string label() const;
};

// Architecture weights for one cell, one entry per path, on the simplex.
struct PathWeights {
  diff::Tensor weights;  // rank 1
  bool hard = false;

  std::size_t size() const { return weights.numel(); }
  std::vector<double> values() const;
};

// softmax((alpha + g) / tau) with g ~ Gumbel(0,1) i.i.d. when `noise`, else
// g = 0. With `hard`, the forward value is the one-hot argmax and the
// gradient is that of the soft weights (straight-through).
PathWeights gumbel_softmax(const diff::Tensor& alpha, double tau, std::mt19937_64& rng,
                           bool hard, bool noise);

// Constant one-hot weights selecting path k; carries no gradient.
PathWeights one_hot_weights(std::size_t n, std::size_t k);

class NfaCell {
 public:
  NfaCell(std::size_t index, std::shared_ptr<const model::NetModule> module, CellMode mode,
          const std::vector<model::AdapterKind>& adapters, std::mt19937_64& rng);

  NfaCell(const NfaCell&) = delete;
  NfaCell& operator=(const NfaCell&) = delete;
  NfaCell(NfaCell&&) = default;
  NfaCell& operator=(NfaCell&&) = default;

  std::size_t index() const { return index_; }
  CellMode mode() const { return mode_; }
  const model::NetModule& module() const { return *module_; }
  const std::vector<CandidatePath>& paths() const { return paths_; }
  std::size_t path_count() const { return paths_.size(); }
  std::string path_label(std::size_t k) const { return paths_.at(k).label(); }

  const diff::Tensor& alpha() const { return alpha_; }
  void set_alpha(const std::vector<double>& values);

  // Parameters each path would train: frozen 0, fine-tune the module size,
  // adapter its own size.
  std::vector<std::size_t> trainable_counts() const;
  // Counts charged by the parameter penalty; the frozen path per `policy`.
  std::vector<std::size_t> path_param_counts(const objective::PfrPolicy& policy) const;

  // Weighted sum of path outputs. The frozen and adapter paths share one
  // backbone evaluation with the pretrained weights.
  diff::Tensor forward(const diff::Tensor& x, const PathWeights& weights) const;
  // Output of path k alone.
  diff::Tensor forward_path(const diff::Tensor& x, std::size_t k) const;

  // argmax of alpha; ties go to the path with the fewest trainable
  // parameters, then to the lowest index.
  std::size_t discretize() const;

  // Fine-tune copy plus every adapter; names are cell-qualified.
  diff::ParameterSet network_params() const;
  // Trainable parameters of path k alone (empty for frozen).
  diff::ParameterSet path_params(std::size_t k) const;
  diff::ParameterSet arch_params() const;

  const std::vector<model::AffineLayer>& finetune_layers() const { return finetune_; }

 private:
  std::string prefix() const;

  std::size_t index_;
  std::shared_ptr<const model::NetModule> module_;
  CellMode mode_;
  std::vector<CandidatePath> paths_;
  std::vector<model::AffineLayer> finetune_;  // empty in NA mode
  diff::Tensor alpha_;
};

// Cells in cascade order.
using CellList = std::vector<NfaCell>;

}  // namespace nfa::cell
