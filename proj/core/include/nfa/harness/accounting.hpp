#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nfa/cell/nfa_cell.hpp"
#include "nfa/objective/penalty_config.hpp"
#include "nfa/search/supernet.hpp"

namespace nfa::harness {

// Parameter totals with these conventions:
//   total    = pretrained weights + every search-time trainable + alpha
//   train    = network group (fine-tune copies, adapters) + alpha
//   selected = trainables of the chosen path per cell (frozen 0)
// Architecture logits count toward total and train, never toward selected.
struct ParamTotals {
  std::size_t total_params = 0;
  std::size_t train_params = 0;
  std::size_t selected_params = 0;

  bool operator==(const ParamTotals&) const = default;
};

struct CellDecision {
  std::size_t index = 0;
  std::string module;
  std::string choice;  // "frozen", "finetune", "adapter:<kind>"
  std::vector<double> alpha;
  std::map<std::string, std::size_t> path_params;  // penalty-charged P per path label

  bool operator==(const CellDecision&) const = default;
};

struct ArchitectureDecision {
  std::string mode;
  std::vector<CellDecision> cells;
  ParamTotals totals;
  std::string config_hash;
  std::uint64_t seed = 0;

  bool operator==(const ArchitectureDecision&) const = default;
};

ParamTotals account_params(const cell::CellList& cells, const search::Scheme& scheme);

ArchitectureDecision make_decision(const cell::CellList& cells, const search::Scheme& scheme,
                                   const objective::PfrPolicy& policy,
                                   const std::string& config_hash, std::uint64_t seed);

}  // namespace nfa::harness
