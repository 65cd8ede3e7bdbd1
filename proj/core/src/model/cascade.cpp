#include "nfa/model/cascade.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nfa/diff/adam.hpp"
#include "nfa/diff/losses.hpp"
#include "nfa/diff/ops.hpp"

namespace nfa::model {

std::size_t CascadeSpec::input_dim() const {
  if (stages.empty() || stages.front().modules.empty()) return 0;
  return stages.front().modules.front().in_dim();
}

std::size_t CascadeSpec::module_count() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.modules.size();
  return n;
}

void CascadeSpec::validate() const {
  if (stages.empty()) throw std::invalid_argument("cascade: no stages");
  if (num_labels < 2) throw std::invalid_argument("cascade: need at least 2 labels");
  const ModuleSpec* prev = nullptr;
  for (const auto& stage : stages) {
    if (stage.modules.empty()) {
      throw std::invalid_argument("cascade: stage '" + stage.name + "' has no modules");
    }
    for (const auto& m : stage.modules) {
      m.validate();
      if (prev && prev->out_dim() != m.in_dim()) {
        throw std::invalid_argument("cascade: module '" + prev->name + "' emits " +
                                    std::to_string(prev->out_dim()) + " but '" + m.name +
                                    "' expects " + std::to_string(m.in_dim()));
      }
      prev = &m;
    }
  }
  if (prev->out_dim() != num_labels) {
    throw std::invalid_argument("cascade: final module '" + prev->name + "' emits " +
                                std::to_string(prev->out_dim()) + " logits, expected " +
                                std::to_string(num_labels));
  }
}

namespace {

ModuleSpec module(std::string name, std::vector<std::size_t> dims, Activation out) {
  return ModuleSpec{std::move(name), std::move(dims), Activation::Tanh, out};
}

}  // namespace

CascadeSpec CascadeSpec::toy() {
  CascadeSpec s;
  s.num_labels = 8;
  s.stages = {
      {"enhance",
       {module("enh0", {16, 16, 16}, Activation::Tanh),
        module("enh1", {16, 16, 16}, Activation::Identity)}},
      {"recognize",
       {module("rec0", {16, 16, 16}, Activation::Tanh),
        module("rec1", {16, 16, 16}, Activation::Softmax)}},
      {"label",
       {module("lab0", {16, 16, 16}, Activation::Tanh),
        module("lab1", {16, 16, 8}, Activation::Identity)}},
  };
  return s;
}

CascadeSpec CascadeSpec::toy_three_cell() {
  CascadeSpec s;
  s.num_labels = 8;
  s.stages = {
      {"enhance", {module("enh0", {16, 16, 16}, Activation::Identity)}},
      {"recognize", {module("rec0", {16, 16, 16}, Activation::Softmax)}},
      {"label", {module("lab0", {16, 16, 8}, Activation::Identity)}},
  };
  return s;
}

ModuleList build_cascade(const CascadeSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ModuleList out;
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    for (const auto& m : spec.stages[s].modules) {
      out.push_back(std::make_shared<NetModule>(m, s, rng));
    }
  }
  return out;
}

diff::Tensor cascade_forward(const ModuleList& modules, const diff::Tensor& x) {
  diff::Tensor h = x;
  for (const auto& m : modules) h = m->forward(h);
  return h;
}

namespace {

std::size_t stage_count(const ModuleList& modules) {
  std::size_t n = 0;
  for (const auto& m : modules) n = std::max(n, m->stage() + 1);
  return n;
}

diff::Tensor stage_loss(const ModuleList& modules, std::size_t stage, const data::Batch& batch) {
  diff::Tensor h = batch.inputs;
  const NetModule* last = nullptr;
  for (const auto& m : modules) {
    if (m->stage() > stage) break;
    const bool is_last_of_stage =
        m->stage() == stage && (&m == &modules.back() || (&m + 1)->get()->stage() != stage);
    if (is_last_of_stage) {
      last = m.get();
      if (stage > 0 && m->spec().output_activation == Activation::Softmax) {
        h = m->forward_preactivation(h);
      } else {
        h = m->forward(h);
      }
    } else {
      h = m->forward(h);
    }
  }
  if (!last) throw std::invalid_argument("pretrain: stage " + std::to_string(stage) + " is empty");
  if (stage == 0) {
    if (!batch.clean.defined()) {
      throw std::invalid_argument("pretrain: source data lacks clean targets");
    }
    return diff::mse_mean(h, batch.clean);
  }
  return diff::nll_mean(diff::log_softmax_lastdim(h), batch.tokens);
}

}  // namespace

double upstream_stage_loss(const ModuleList& modules, std::size_t stage,
                           const data::Dataset& data) {
  if (data.empty()) throw std::invalid_argument("upstream_stage_loss: empty data");
  return stage_loss(modules, stage, data::full_batch(data)).item();
}

std::vector<StagePretrainLoss> pretrain_upstream(ModuleList& modules, const data::Dataset& source,
                                                 const PretrainConfig& cfg) {
  if (source.empty()) throw std::invalid_argument("pretrain_upstream: empty source data");
  if (cfg.batch_size == 0) throw std::invalid_argument("pretrain_upstream: zero batch size");
  source.validate();

  const std::size_t stages = stage_count(modules);
  std::mt19937_64 rng(cfg.seed);
  std::vector<StagePretrainLoss> report;
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t s = 0; s + 1 < stages; ++s) {
    diff::ParameterSet params;
    for (std::size_t i = 0; i < modules.size(); ++i) {
      if (modules[i]->stage() == s) {
        params.merge(modules[i]->pretrained_params(), modules[i]->name() + ".");
      }
    }
    StagePretrainLoss entry{s, upstream_stage_loss(modules, s, source), 0.0};
    diff::AdamState adam;
    const diff::AdamConfig acfg{cfg.lr};
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        auto batch = data::make_batch(source, std::span(order).subspan(start, end - start));
        auto loss = stage_loss(modules, s, batch);
        diff::backward(loss);
        diff::adam_step(params, acfg, adam);
        params.zero_grad();
      }
    }
    entry.final = upstream_stage_loss(modules, s, source);
    report.push_back(entry);
    for (auto& m : modules) {
      if (m->stage() == s) m->freeze();
    }
  }
  for (auto& m : modules) {
    if (!m->frozen()) m->freeze();
  }
  return report;
}

}  // namespace nfa::model
