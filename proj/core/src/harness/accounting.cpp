#include "nfa/harness/accounting.hpp"

namespace nfa::harness {

ParamTotals account_params(const cell::CellList& cells, const search::Scheme& scheme) {
  search::validate_scheme(cells, scheme);
  ParamTotals t;
  std::size_t pretrained = 0;
  std::size_t network = 0;
  std::size_t alpha = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    pretrained += c.module().param_count();
    const auto counts = c.trainable_counts();
    for (auto n : counts) network += n;
    alpha += c.alpha().numel();
    t.selected_params += counts[scheme[i]];
  }
  t.train_params = network + alpha;
  t.total_params = pretrained + t.train_params;
  return t;
}

ArchitectureDecision make_decision(const cell::CellList& cells, const search::Scheme& scheme,
                                   const objective::PfrPolicy& policy,
                                   const std::string& config_hash, std::uint64_t seed) {
  ArchitectureDecision d;
  d.mode = cells.empty() ? "nfa" : cell::to_string(cells.front().mode());
  d.totals = account_params(cells, scheme);
  d.config_hash = config_hash;
  d.seed = seed;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    CellDecision cd;
    cd.index = c.index();
    cd.module = c.module().name();
    cd.choice = c.path_label(scheme[i]);
    auto a = c.alpha().value();
    cd.alpha.assign(a.begin(), a.end());
    const auto counts = c.path_param_counts(policy);
    for (std::size_t k = 0; k < c.path_count(); ++k) cd.path_params[c.path_label(k)] = counts[k];
    d.cells.push_back(std::move(cd));
  }
  return d;
}

}  // namespace nfa::harness
