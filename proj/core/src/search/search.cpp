#include "nfa/search/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nfa/diff/ops.hpp"
#include "nfa/objective/objective.hpp"

namespace nfa::search {

const char* to_string(TauDecay d) {
  switch (d) {
    case TauDecay::Exponential: return "exponential";
    case TauDecay::Linear: return "linear";
    case TauDecay::Constant: return "constant";
  }
  return "unknown";
}

TauDecay parse_tau_decay(const std::string& name) {
  if (name == "exponential") return TauDecay::Exponential;
  if (name == "linear") return TauDecay::Linear;
  if (name == "constant") return TauDecay::Constant;
  throw std::invalid_argument("unknown tau decay '" + name +
                              "' (expected exponential, linear or constant)");
}

double TauSchedule::at(std::size_t epoch, std::size_t epochs) const {
  if (decay == TauDecay::Constant || epochs <= 1) return start;
  const double t = static_cast<double>(std::min(epoch, epochs - 1)) /
                   static_cast<double>(epochs - 1);
  if (decay == TauDecay::Linear) return start + (end - start) * t;
  return start * std::pow(end / start, t);
}

const char* to_string(Stage s) { return s == Stage::One ? "1" : "2"; }

void SearchConfig::validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw std::invalid_argument("search: split_ratio must lie in (0, 1)");
  }
  if (!(lr_network > 0.0) || !(lr_arch > 0.0)) {
    throw std::invalid_argument("search: learning rates must be positive");
  }
  if (batch_size == 0) throw std::invalid_argument("search: batch_size must be positive");
  if (!(tau.start > 0.0) || !(tau.end > 0.0)) {
    throw std::invalid_argument("search: tau schedule must stay positive");
  }
}

std::pair<data::Dataset, data::Dataset> split_dataset(const data::Dataset& data, double ratio,
                                                      std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("split_dataset: empty data");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split_dataset: ratio must lie in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(data.size()) + 0.5));
  std::span<const std::size_t> all(order);
  return {data::subset(data, all.first(n_train)), data::subset(data, all.subspan(n_train))};
}

namespace {

void zero_all(diff::ParameterSet& a, diff::ParameterSet& b) {
  a.zero_grad();
  b.zero_grad();
}

}  // namespace

BilevelSearch::BilevelSearch(cell::CellList& cells, const data::Dataset& train,
                             const data::Dataset& val, SearchConfig cfg,
                             objective::PenaltyConfig penalty)
    : cells_(cells),
      train_(train),
      val_(val),
      cfg_(std::move(cfg)),
      penalty_(penalty),
      rng_(cfg_.seed) {
  cfg_.validate();
  if (cells_.empty()) throw std::invalid_argument("search: no cells");
  if (train_.empty()) throw std::invalid_argument("search: empty training part");
  if (val_.empty()) throw std::invalid_argument("search: empty validation part");
  val_order_.resize(val_.size());
  std::iota(val_order_.begin(), val_order_.end(), 0);
  std::shuffle(val_order_.begin(), val_order_.end(), rng_);
}

void BilevelSearch::notify(StepKind kind, bool after) const {
  if (observer_) observer_({kind, after});
}

double BilevelSearch::arch_step(const data::Batch& val_batch, double tau) {
  if (val_batch.size() == 0) throw std::invalid_argument("arch_step: empty batch");
  notify(StepKind::Arch, false);
  auto arch = arch_params(cells_);
  auto net = network_params(cells_);
  auto weights = sample_weights(cells_, tau, rng_, true, true);
  auto logits = supernet_forward(cells_, val_batch.inputs, weights);
  auto task = objective::task_loss(logits, val_batch.labels);
  auto pen = objective::penalty(cells_, weights, penalty_);
  auto total = objective::total_loss(task, pen, penalty_);
  diff::backward(total);
  diff::adam_step(arch, {cfg_.lr_arch}, arch_adam_);
  zero_all(arch, net);
  arch_ids_.insert(val_batch.ids.begin(), val_batch.ids.end());
  notify(StepKind::Arch, true);
  return total.item();
}

double BilevelSearch::net_step(const data::Batch& train_batch, double tau) {
  if (train_batch.size() == 0) throw std::invalid_argument("net_step: empty batch");
  notify(StepKind::Net, false);
  auto arch = arch_params(cells_);
  auto net = network_params(cells_);
  auto weights = sample_weights(cells_, tau, rng_, true, true);
  auto logits = supernet_forward(cells_, train_batch.inputs, weights);
  auto task = objective::task_loss(logits, train_batch.labels);
  diff::backward(task);
  diff::adam_step(net, {cfg_.lr_network}, net_adam_);
  zero_all(arch, net);
  net_ids_.insert(train_batch.ids.begin(), train_batch.ids.end());
  notify(StepKind::Net, true);
  return task.item();
}

double BilevelSearch::fixed_step(const data::Batch& train_batch, const Scheme& scheme) {
  if (train_batch.size() == 0) throw std::invalid_argument("fixed_step: empty batch");
  notify(StepKind::Fixed, false);
  auto params = scheme_params(cells_, scheme);
  auto task = objective::task_loss(scheme_forward(cells_, train_batch.inputs, scheme),
                                   train_batch.labels);
  double loss = task.item();
  if (!params.empty()) {
    diff::backward(task);
    diff::adam_step(params, {cfg_.lr_network}, net_adam_);
    params.zero_grad();
  }
  net_ids_.insert(train_batch.ids.begin(), train_batch.ids.end());
  notify(StepKind::Fixed, true);
  return loss;
}

data::Batch BilevelSearch::next_val_batch() {
  const std::size_t n = std::min(cfg_.batch_size, val_.size());
  std::vector<std::size_t> idx;
  idx.reserve(n);
  while (idx.size() < n) {
    if (val_cursor_ == val_order_.size()) {
      std::shuffle(val_order_.begin(), val_order_.end(), rng_);
      val_cursor_ = 0;
    }
    idx.push_back(val_order_[val_cursor_++]);
  }
  return data::make_batch(val_, idx);
}

double BilevelSearch::val_task_loss() const {
  return scheme_task_loss(cells_, discretize_all(cells_), val_);
}

EpochRecord BilevelSearch::make_record(Stage stage, double train_loss, double penalty) const {
  EpochRecord r;
  r.epoch = state_.epoch;
  r.stage = stage;
  r.train_loss = train_loss;
  r.penalty = penalty;
  r.discretization = discretize_all(cells_);
  r.val_loss = scheme_task_loss(cells_, r.discretization, val_);
  r.selected_params = selected_param_count(cells_, r.discretization);
  for (const auto& c : cells_) {
    auto a = c.alpha().value();
    r.alpha.emplace_back(a.begin(), a.end());
  }
  return r;
}

const SearchState& BilevelSearch::run_stage1() {
  if (state_.stage1_complete) throw std::logic_error("run_stage1: stage 1 already ran");
  state_.stage = Stage::One;
  state_.arch_frozen = false;
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < cfg_.stage1_epochs; ++e) {
    const double tau = cfg_.tau.at(e, cfg_.stage1_epochs);
    std::shuffle(order.begin(), order.end(), rng_);
    double train_sum = 0.0;
    std::size_t iters = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
      arch_step(next_val_batch(), tau);
      auto train_batch = data::make_batch(train_, std::span(order).subspan(start, end - start));
      train_sum += net_step(train_batch, tau);
      ++iters;
    }
    // Penalty of the current noise-free soft architecture.
    auto soft = sample_weights(cells_, 1.0, rng_, false, false);
    const double pen = objective::penalty(cells_, soft, penalty_).item();
    state_.history.push_back(make_record(Stage::One, train_sum / static_cast<double>(iters), pen));
    ++state_.epoch;
  }
  state_.stage1_complete = true;
  return state_;
}

const SearchState& BilevelSearch::run_stage2() {
  if (!state_.stage1_complete) {
    throw std::logic_error("run_stage2: stage 1 must complete before stage 2");
  }
  state_.stage = Stage::Two;
  state_.arch_frozen = true;
  const Scheme scheme = discretize_all(cells_);
  std::vector<cell::PathWeights> fixed;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    fixed.push_back(cell::one_hot_weights(cells_[i].path_count(), scheme[i]));
  }
  const double pen = objective::penalty(cells_, fixed, penalty_).item();
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < cfg_.stage2_epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng_);
    double train_sum = 0.0;
    std::size_t iters = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
      auto batch = data::make_batch(train_, std::span(order).subspan(start, end - start));
      train_sum += fixed_step(batch, scheme);
      ++iters;
    }
    state_.history.push_back(make_record(Stage::Two, train_sum / static_cast<double>(iters), pen));
    ++state_.epoch;
  }
  return state_;
}

void train_fixed_scheme(cell::CellList& cells, const Scheme& scheme, const data::Dataset& train,
                        std::size_t epochs, double lr, std::size_t batch_size,
                        std::uint64_t seed) {
  if (train.empty()) throw std::invalid_argument("train_fixed_scheme: empty data");
  if (batch_size == 0) throw std::invalid_argument("train_fixed_scheme: zero batch size");
  auto params = scheme_params(cells, scheme);
  if (params.empty()) return;
  diff::AdamState adam;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      auto batch = data::make_batch(train, std::span(order).subspan(start, end - start));
      auto task = objective::task_loss(scheme_forward(cells, batch.inputs, scheme), batch.labels);
      diff::backward(task);
      diff::adam_step(params, {lr}, adam);
      params.zero_grad();
    }
  }
}

}  // namespace nfa::search
