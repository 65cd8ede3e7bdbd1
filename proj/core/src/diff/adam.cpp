#include "nfa/diff/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace nfa::diff {

AdamState::Moments& AdamState::moments_for(const std::string& name, std::size_t size) {
  auto& mo = entries_[name];
  if (mo.m.empty()) {
    mo.m.assign(size, 0.0);
    mo.v.assign(size, 0.0);
  } else if (mo.m.size() != size) {
    throw std::invalid_argument("adam: state for '" + name + "' has " +
                                std::to_string(mo.m.size()) + " elements, parameter has " +
                                std::to_string(size));
  }
  return mo;
}

void adam_step(ParameterSet& params, const AdamConfig& cfg, AdamState& state) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) throw std::logic_error("adam: parameter '" + name + "' has no gradient");
  }
  for (const auto& [name, t] : params) {
    Tensor p = t;
    auto value = p.mutable_value();
    auto grad = p.grad();
    auto& mo = state.moments_for(name, value.size());
    ++mo.steps;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(mo.steps));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(mo.steps));
    for (std::size_t i = 0; i < value.size(); ++i) {
      mo.m[i] = cfg.beta1 * mo.m[i] + (1.0 - cfg.beta1) * grad[i];
      mo.v[i] = cfg.beta2 * mo.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double m_hat = mo.m[i] / bc1;
      const double v_hat = mo.v[i] / bc2;
      value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace nfa::diff
