#include "nfa/objective/objective.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "nfa/diff/losses.hpp"
#include "nfa/diff/ops.hpp"

namespace nfa::objective {

std::size_t PfrPolicy::frozen_count(std::size_t finetune_count) const {
  switch (kind) {
    case PfrPolicyKind::Zero: return 0;
    case PfrPolicyKind::Constant: return constant;
    case PfrPolicyKind::HalfFineTune: return finetune_count / 2;
  }
  return 0;
}

const char* to_string(PfrPolicyKind kind) {
  switch (kind) {
    case PfrPolicyKind::Zero: return "zero";
    case PfrPolicyKind::Constant: return "constant";
    case PfrPolicyKind::HalfFineTune: return "half";
  }
  return "unknown";
}

PfrPolicyKind parse_pfr_policy(const std::string& name) {
  if (name == "zero") return PfrPolicyKind::Zero;
  if (name == "constant") return PfrPolicyKind::Constant;
  if (name == "half") return PfrPolicyKind::HalfFineTune;
  throw std::invalid_argument("unknown pfr policy '" + name + "' (expected zero, constant or half)");
}

diff::Tensor task_loss(const diff::Tensor& final_logits, std::span<const int> labels) {
  return diff::nll_mean(diff::log_softmax_lastdim(final_logits), labels);
}

diff::Tensor penalty_term(std::span<const std::size_t> counts, const diff::Tensor& weights) {
  if (weights.numel() != counts.size()) {
    throw std::invalid_argument("penalty: " + std::to_string(counts.size()) + " paths but " +
                                std::to_string(weights.numel()) + " weights");
  }
  double denom = 0.0;
  for (auto n : counts) denom += static_cast<double>(n);
  if (denom == 0.0) throw std::domain_error("penalty: zero total parameter count");
  std::vector<double> coeff(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) coeff[k] = static_cast<double>(counts[k]) / denom;
  return diff::sum(
      diff::mul(weights, diff::Tensor::constant({counts.size()}, std::move(coeff))));
}

diff::Tensor cell_penalty(const cell::NfaCell& c, const cell::PathWeights& w,
                          const PfrPolicy& policy) {
  const auto counts = c.path_param_counts(policy);
  try {
    return penalty_term(counts, w.weights);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("cell " + std::to_string(c.index()) + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw std::domain_error("cell " + std::to_string(c.index()) + ": " + e.what());
  }
}

diff::Tensor penalty(std::span<const cell::NfaCell> cells,
                     std::span<const cell::PathWeights> weights, const PenaltyConfig& cfg) {
  if (cells.size() != weights.size()) {
    throw std::invalid_argument("penalty: " + std::to_string(cells.size()) + " cells but " +
                                std::to_string(weights.size()) + " weight vectors");
  }
  diff::Tensor total = diff::Tensor::scalar(0.0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    total = diff::add(total, cell_penalty(cells[i], weights[i], cfg.pfr));
  }
  return total;
}

diff::Tensor total_loss(const diff::Tensor& task, const diff::Tensor& pen,
                        const PenaltyConfig& cfg) {
  if (!cfg.enabled || cfg.lambda == 0.0) return task;
  return diff::add(task, diff::scale(pen, cfg.lambda));
}

}  // namespace nfa::objective
