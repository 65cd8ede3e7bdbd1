#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nfa/cell/nfa_cell.hpp"
#include "nfa/data/dataset.hpp"
#include "nfa/diff/adam.hpp"
#include "nfa/objective/penalty_config.hpp"
#include "nfa/search/supernet.hpp"

namespace nfa::search {

enum class TauDecay { Exponential, Linear, Constant };

const char* to_string(TauDecay d);
TauDecay parse_tau_decay(const std::string& name);

struct TauSchedule {
  double start = 5.0;
  double end = 0.5;
  TauDecay decay = TauDecay::Exponential;

  // Temperature for `epoch` in [0, epochs); reaches `end` on the last epoch.
  double at(std::size_t epoch, std::size_t epochs) const;
  bool operator==(const TauSchedule&) const = default;
};

struct SearchConfig {
  double split_ratio = 0.5;
  double lr_network = 1e-4;
  double lr_arch = 1e-3;
  std::size_t stage1_epochs = 10;
  std::size_t stage2_epochs = 0;
  TauSchedule tau;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SearchConfig&) const = default;
};

enum class Stage { One, Two };
const char* to_string(Stage s);

struct EpochRecord {
  std::size_t epoch = 0;
  Stage stage = Stage::One;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double penalty = 0.0;
  std::vector<std::vector<double>> alpha;
  Scheme discretization;
  std::size_t selected_params = 0;
};

struct SearchState {
  std::size_t epoch = 0;
  Stage stage = Stage::One;
  bool arch_frozen = false;
  bool stage1_complete = false;
  std::vector<EpochRecord> history;
};

// Seeded shuffle then cut: the first round(ratio * N) rows (half rounded up)
// train the network, the rest train the architecture.
std::pair<data::Dataset, data::Dataset> split_dataset(const data::Dataset& data, double ratio,
                                                      std::uint64_t seed);

enum class StepKind { Arch, Net, Fixed };

struct StepEvent {
  StepKind kind;
  bool after;  // false: about to run, true: just finished
};

// Alternating first-order bilevel search over a list of cells. Architecture
// logits learn on the validation part, network parameters on the training
// part; each iteration runs one architecture step and then one network step.
class BilevelSearch {
 public:
  BilevelSearch(cell::CellList& cells, const data::Dataset& train, const data::Dataset& val,
                SearchConfig cfg, objective::PenaltyConfig penalty);

  // One optimizer update of the alpha group on a validation batch; returns
  // the total (task + penalty) loss.
  double arch_step(const data::Batch& val_batch, double tau);
  // One optimizer update of the network group on a training batch with
  // sampled paths; returns the task loss.
  double net_step(const data::Batch& train_batch, double tau);
  // One optimizer update of the parameters of a fixed scheme.
  double fixed_step(const data::Batch& train_batch, const Scheme& scheme);

  const SearchState& run_stage1();
  // Throws std::logic_error unless stage 1 has completed.
  const SearchState& run_stage2();

  const SearchState& state() const { return state_; }
  Scheme discretization() const { return discretize_all(cells_); }
  double val_task_loss() const;

  const std::set<std::size_t>& arch_sample_ids() const { return arch_ids_; }
  const std::set<std::size_t>& net_sample_ids() const { return net_ids_; }

  void set_step_observer(std::function<void(const StepEvent&)> observer) {
    observer_ = std::move(observer);
  }

 private:
  data::Batch next_val_batch();
  EpochRecord make_record(Stage stage, double train_loss, double penalty) const;
  void notify(StepKind kind, bool after) const;

  cell::CellList& cells_;
  const data::Dataset& train_;
  const data::Dataset& val_;
  SearchConfig cfg_;
  objective::PenaltyConfig penalty_;
  std::mt19937_64 rng_;
  diff::AdamState net_adam_;
  diff::AdamState arch_adam_;
  std::vector<std::size_t> val_order_;
  std::size_t val_cursor_ = 0;
  SearchState state_;
  std::set<std::size_t> arch_ids_;
  std::set<std::size_t> net_ids_;
  std::function<void(const StepEvent&)> observer_;
};

// Trains only the parameters of `scheme` for `epochs` passes over `train`
// with fresh optimizer state. Used for budget-matched scheme evaluation.
void train_fixed_scheme(cell::CellList& cells, const Scheme& scheme, const data::Dataset& train,
                        std::size_t epochs, double lr, std::size_t batch_size,
                        std::uint64_t seed);

}  // namespace nfa::search
