#include "nfa/diff/losses.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "nfa/diff/ops.hpp"

namespace nfa::diff {

Tensor nll_mean(const Tensor& log_probs, std::span<const int> targets) {
  if (log_probs.rank() != 2) {
    throw std::invalid_argument("nll_mean: expected (batch, classes), got " +
                                to_string(log_probs.shape()));
  }
  const std::size_t n = log_probs.dim(0);
  const std::size_t k = log_probs.dim(1);
  if (targets.size() != n) {
    throw std::invalid_argument("nll_mean: " + std::to_string(targets.size()) +
                                " targets for batch of " + std::to_string(n));
  }
  std::vector<double> mask(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= k) {
      throw std::invalid_argument("nll_mean: label " + std::to_string(targets[i]) +
                                  " outside [0, " + std::to_string(k) + ")");
    }
    mask[i * k + static_cast<std::size_t>(targets[i])] = 1.0;
  }
  Tensor picked = mul(log_probs, Tensor::constant({n, k}, std::move(mask)));
  return scale(sum(picked), -1.0 / static_cast<double>(n));
}

Tensor mse_mean(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw std::invalid_argument("mse_mean: shape " + to_string(prediction.shape()) + " vs " +
                                to_string(target.shape()));
  }
  Tensor d = sub(prediction, target);
  return mean(mul(d, d));
}

}  // namespace nfa::diff
