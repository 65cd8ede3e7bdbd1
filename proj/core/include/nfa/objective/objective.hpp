#pragma once

#include <span>

#include "nfa/cell/nfa_cell.hpp"
#include "nfa/diff/tensor.hpp"
#include "nfa/objective/penalty_config.hpp"

namespace nfa::objective {

// Mean cross-entropy of the final-task logits (batch, L). Only the last
// stage's task contributes; upstream stages carry no loss of their own.
diff::Tensor task_loss(const diff::Tensor& final_logits, std::span<const int> labels);

// Parameter penalty, summed over cells:
//
//   sum_i  ( sum_k a_{i,k} * P_{i,k} ) / ( sum_k P_{i,k} )
//
// where k runs over every path of cell i (frozen, fine-tune, each adapter),
// a are the current architecture weights and P the charged parameter counts
// (frozen per cfg.pfr). Each cell term lies in [0, 1]. Differentiable with
// respect to whatever the weights depend on. Throws std::domain_error if a
// cell's counts sum to zero.
diff::Tensor penalty(std::span<const cell::NfaCell> cells,
                     std::span<const cell::PathWeights> weights, const PenaltyConfig& cfg);

// One cell's term from raw per-path counts and a rank-1 weight vector.
diff::Tensor penalty_term(std::span<const std::size_t> counts, const diff::Tensor& weights);

// Single-cell term, exposed for fixtures and diagnostics.
diff::Tensor cell_penalty(const cell::NfaCell& c, const cell::PathWeights& w,
                          const PfrPolicy& policy);

// task + lambda * pen when enabled, else task.
diff::Tensor total_loss(const diff::Tensor& task, const diff::Tensor& pen,
                        const PenaltyConfig& cfg);

}  // namespace nfa::objective
