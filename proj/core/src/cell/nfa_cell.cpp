#include "nfa/cell/nfa_cell.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nfa/diff/ops.hpp"

namespace nfa::cell {

const char* to_string(CellMode mode) { return mode == CellMode::NA ? "na" : "nfa"; }

CellMode parse_cell_mode(const std::string& name) {
  if (name == "na") return CellMode::NA;
  if (name == "nfa") return CellMode::NFA;
  throw std::invalid_argument("unknown cell mode '" + name + "' (expected na or nfa)");
}

std::string CandidatePath::label() const {
  switch (kind) {
    case PathKind::Frozen: return "frozen";
    case PathKind::FineTune: return "finetune";
    case PathKind::Adapter: return std::string("adapter:") + model::to_string(adapter->kind());
  }
  return "unknown";
}

std::vector<double> PathWeights::values() const {
  auto v = weights.value();
  return {v.begin(), v.end()};
}

PathWeights gumbel_softmax(const diff::Tensor& alpha, double tau, std::mt19937_64& rng,
                           bool hard, bool noise) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: tau must be positive");
  if (alpha.rank() != 1) {
    throw std::invalid_argument("gumbel_softmax: alpha must be rank 1, got " +
                                diff::to_string(alpha.shape()));
  }
  diff::Tensor logits = alpha;
  if (noise) {
    std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);
    std::vector<double> g(alpha.numel());
    for (auto& v : g) v = -std::log(-std::log(uni(rng)));
    logits = diff::add(alpha, diff::Tensor::constant(alpha.shape(), std::move(g)));
  }
  diff::Tensor soft = diff::softmax_lastdim(diff::scale(logits, 1.0 / tau));
  if (!hard) return {soft, false};
  return {diff::straight_through(soft), true};
}

PathWeights one_hot_weights(std::size_t n, std::size_t k) {
  if (k >= n) throw std::out_of_range("one_hot_weights: index out of range");
  std::vector<double> w(n, 0.0);
  w[k] = 1.0;
  return {diff::Tensor::constant({n}, std::move(w)), true};
}

NfaCell::NfaCell(std::size_t index, std::shared_ptr<const model::NetModule> module,
                 CellMode mode, const std::vector<model::AdapterKind>& adapters,
                 std::mt19937_64& rng)
    : index_(index), module_(std::move(module)), mode_(mode) {
  if (!module_) throw std::invalid_argument("NfaCell: null module");
  if (adapters.empty()) throw std::invalid_argument("NfaCell: at least one adapter candidate required");
  if (mode_ == CellMode::NA && adapters.size() != 1) {
    throw std::invalid_argument("NfaCell: NA mode takes exactly one adapter, got " +
                                std::to_string(adapters.size()));
  }
  paths_.push_back({PathKind::Frozen, std::nullopt});
  if (mode_ == CellMode::NFA) {
    paths_.push_back({PathKind::FineTune, std::nullopt});
    finetune_ = model::clone_layers(module_->layers(), true);
  }
  for (auto kind : adapters) {
    paths_.push_back({PathKind::Adapter, model::Adapter::make(kind, module_->out_dim(), rng)});
  }
  alpha_ = diff::Tensor::zeros({paths_.size()}, true);
}

void NfaCell::set_alpha(const std::vector<double>& values) {
  if (values.size() != paths_.size()) {
    throw std::invalid_argument("set_alpha: " + std::to_string(values.size()) +
                                " values for " + std::to_string(paths_.size()) + " paths");
  }
  auto dst = alpha_.mutable_value();
  std::copy(values.begin(), values.end(), dst.begin());
}

std::vector<std::size_t> NfaCell::trainable_counts() const {
  std::vector<std::size_t> out;
  for (const auto& p : paths_) {
    switch (p.kind) {
      case PathKind::Frozen: out.push_back(0); break;
      case PathKind::FineTune: out.push_back(module_->param_count()); break;
      case PathKind::Adapter: out.push_back(p.adapter->param_count()); break;
    }
  }
  return out;
}

std::vector<std::size_t> NfaCell::path_param_counts(const objective::PfrPolicy& policy) const {
  auto out = trainable_counts();
  out[0] = policy.frozen_count(module_->param_count());
  return out;
}

diff::Tensor NfaCell::forward_path(const diff::Tensor& x, std::size_t k) const {
  const auto& p = paths_.at(k);
  switch (p.kind) {
    case PathKind::Frozen: return module_->forward(x);
    case PathKind::FineTune: {
      if (x.rank() != 2 || x.dim(1) != module_->in_dim()) {
        throw std::invalid_argument("cell " + std::to_string(index_) + ": bad input shape " +
                                    diff::to_string(x.shape()));
      }
      return model::run_layers(finetune_, x, true);
    }
    case PathKind::Adapter: return p.adapter->forward(module_->forward(x));
  }
  throw std::logic_error("unreachable path kind");
}

diff::Tensor NfaCell::forward(const diff::Tensor& x, const PathWeights& weights) const {
  if (weights.size() != paths_.size()) {
    throw std::invalid_argument("cell " + std::to_string(index_) + ": " +
                                std::to_string(weights.size()) + " weights for " +
                                std::to_string(paths_.size()) + " paths");
  }
  const diff::Tensor backbone = module_->forward(x);
  diff::Tensor out;
  for (std::size_t k = 0; k < paths_.size(); ++k) {
    diff::Tensor path_out;
    switch (paths_[k].kind) {
      case PathKind::Frozen: path_out = backbone; break;
      case PathKind::FineTune: path_out = model::run_layers(finetune_, x, true); break;
      case PathKind::Adapter: path_out = paths_[k].adapter->forward(backbone); break;
    }
    auto term = diff::mul(path_out, diff::slice_lastdim(weights.weights, k, k + 1));
    out = out.defined() ? diff::add(out, term) : term;
  }
  return out;
}

std::size_t NfaCell::discretize() const {
  const auto a = alpha_.value();
  const auto counts = trainable_counts();
  std::size_t best = 0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    if (a[k] > a[best] || (a[k] == a[best] && counts[k] < counts[best])) best = k;
  }
  return best;
}

std::string NfaCell::prefix() const { return "cell" + std::to_string(index_) + "."; }

diff::ParameterSet NfaCell::path_params(std::size_t k) const {
  diff::ParameterSet ps;
  const auto& p = paths_.at(k);
  if (p.kind == PathKind::FineTune) {
    ps.merge(model::layer_params(finetune_), prefix() + "finetune.");
  } else if (p.kind == PathKind::Adapter) {
    ps.merge(p.adapter->params(), prefix() + "path" + std::to_string(k) + "." +
                                      model::to_string(p.adapter->kind()) + ".");
  }
  return ps;
}

diff::ParameterSet NfaCell::network_params() const {
  diff::ParameterSet ps;
  for (std::size_t k = 0; k < paths_.size(); ++k) ps.merge(path_params(k));
  return ps;
}

diff::ParameterSet NfaCell::arch_params() const {
  diff::ParameterSet ps;
  ps.add(prefix() + "alpha", alpha_);
  return ps;
}

}  // namespace nfa::cell
