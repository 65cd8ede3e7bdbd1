#include "nfa/search/supernet.hpp"

#include <stdexcept>
#include <string>

#include "nfa/objective/objective.hpp"

namespace nfa::search {

cell::CellList build_cells(const model::ModuleList& modules, cell::CellMode mode,
                           const std::vector<std::vector<model::AdapterKind>>& adapters,
                           std::uint64_t seed) {
  if (adapters.empty()) throw std::invalid_argument("build_cells: no adapter candidates");
  if (adapters.size() != 1 && adapters.size() != modules.size()) {
    throw std::invalid_argument("build_cells: " + std::to_string(adapters.size()) +
                                " adapter lists for " + std::to_string(modules.size()) +
                                " cells");
  }
  std::mt19937_64 rng(seed);
  cell::CellList cells;
  cells.reserve(modules.size());
  for (std::size_t i = 0; i < modules.size(); ++i) {
    const auto& kinds = adapters.size() == 1 ? adapters[0] : adapters[i];
    cells.emplace_back(i, modules[i], mode, kinds, rng);
  }
  return cells;
}

std::vector<cell::PathWeights> sample_weights(const cell::CellList& cells, double tau,
                                              std::mt19937_64& rng, bool hard, bool noise) {
  std::vector<cell::PathWeights> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(cell::gumbel_softmax(c.alpha(), tau, rng, hard, noise));
  return out;
}

diff::Tensor supernet_forward(const cell::CellList& cells, const diff::Tensor& x,
                              std::span<const cell::PathWeights> weights) {
  if (weights.size() != cells.size()) {
    throw std::invalid_argument("supernet_forward: " + std::to_string(weights.size()) +
                                " weight vectors for " + std::to_string(cells.size()) + " cells");
  }
  diff::Tensor h = x;
  for (std::size_t i = 0; i < cells.size(); ++i) h = cells[i].forward(h, weights[i]);
  return h;
}

void validate_scheme(const cell::CellList& cells, const Scheme& scheme) {
  if (scheme.size() != cells.size()) {
    throw std::invalid_argument("scheme has " + std::to_string(scheme.size()) +
                                " entries for " + std::to_string(cells.size()) + " cells");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (scheme[i] >= cells[i].path_count()) {
      throw std::invalid_argument("scheme: cell " + std::to_string(i) + " has no path " +
                                  std::to_string(scheme[i]));
    }
  }
}

diff::Tensor scheme_forward(const cell::CellList& cells, const diff::Tensor& x,
                            const Scheme& scheme) {
  validate_scheme(cells, scheme);
  diff::Tensor h = x;
  for (std::size_t i = 0; i < cells.size(); ++i) h = cells[i].forward_path(h, scheme[i]);
  return h;
}

Scheme discretize_all(const cell::CellList& cells) {
  Scheme s;
  s.reserve(cells.size());
  for (const auto& c : cells) s.push_back(c.discretize());
  return s;
}

diff::ParameterSet network_params(const cell::CellList& cells) {
  diff::ParameterSet ps;
  for (const auto& c : cells) ps.merge(c.network_params());
  return ps;
}

diff::ParameterSet arch_params(const cell::CellList& cells) {
  diff::ParameterSet ps;
  for (const auto& c : cells) ps.merge(c.arch_params());
  return ps;
}

diff::ParameterSet scheme_params(const cell::CellList& cells, const Scheme& scheme) {
  validate_scheme(cells, scheme);
  diff::ParameterSet ps;
  for (std::size_t i = 0; i < cells.size(); ++i) ps.merge(cells[i].path_params(scheme[i]));
  return ps;
}

std::size_t selected_param_count(const cell::CellList& cells, const Scheme& scheme) {
  validate_scheme(cells, scheme);
  std::size_t n = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) n += cells[i].trainable_counts()[scheme[i]];
  return n;
}

double scheme_task_loss(const cell::CellList& cells, const Scheme& scheme,
                        const data::Dataset& data) {
  if (data.empty()) throw std::invalid_argument("scheme_task_loss: empty data");
  auto batch = data::full_batch(data);
  return objective::task_loss(scheme_forward(cells, batch.inputs, scheme), batch.labels).item();
}

}  // namespace nfa::search
