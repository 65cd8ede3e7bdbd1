#pragma once

#include <span>

#include "nfa/diff/tensor.hpp"

namespace nfa::diff {

// Mean negative log-likelihood of `targets` under row-wise log-probabilities
// (batch, classes). Throws std::invalid_argument on an out-of-range target.
Tensor nll_mean(const Tensor& log_probs, std::span<const int> targets);

// Mean squared error over all elements.
Tensor mse_mean(const Tensor& prediction, const Tensor& target);

}  // namespace nfa::diff
