#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nfa/cell/nfa_cell.hpp"
#include "nfa/data/dataset.hpp"
#include "nfa/model/cascade.hpp"

namespace nfa::search {

// A discrete architecture: one chosen path index per cell.
using Scheme = std::vector<std::size_t>;

// Wraps every module of the cascade in a cell. `adapters[i]` lists the
// adapter candidates of cell i; a single entry is broadcast to all cells.
cell::CellList build_cells(const model::ModuleList& modules, cell::CellMode mode,
                           const std::vector<std::vector<model::AdapterKind>>& adapters,
                           std::uint64_t seed);

std::vector<cell::PathWeights> sample_weights(const cell::CellList& cells, double tau,
                                              std::mt19937_64& rng, bool hard, bool noise);

diff::Tensor supernet_forward(const cell::CellList& cells, const diff::Tensor& x,
                              std::span<const cell::PathWeights> weights);
// Evaluates only the chosen path of each cell.
diff::Tensor scheme_forward(const cell::CellList& cells, const diff::Tensor& x,
                            const Scheme& scheme);

Scheme discretize_all(const cell::CellList& cells);
void validate_scheme(const cell::CellList& cells, const Scheme& scheme);

diff::ParameterSet network_params(const cell::CellList& cells);
diff::ParameterSet arch_params(const cell::CellList& cells);
// Parameters that receive gradients when `scheme` is trained.
diff::ParameterSet scheme_params(const cell::CellList& cells, const Scheme& scheme);
std::size_t selected_param_count(const cell::CellList& cells, const Scheme& scheme);

// Mean task loss of the discrete scheme over the whole dataset.
double scheme_task_loss(const cell::CellList& cells, const Scheme& scheme,
                        const data::Dataset& data);

}  // namespace nfa::search
