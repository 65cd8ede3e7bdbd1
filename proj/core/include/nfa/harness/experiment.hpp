#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nfa/data/dataset.hpp"
#include "nfa/harness/accounting.hpp"
#include "nfa/harness/config.hpp"
#include "nfa/model/cascade.hpp"
#include "nfa/search/search.hpp"

namespace nfa::harness {

// Independent sub-seeds derived from the experiment seed.
struct SeedPlan {
  std::uint64_t cascade;
  std::uint64_t source_data;
  std::uint64_t target_data;
  std::uint64_t pretrain;
  std::uint64_t split;
  std::uint64_t cells;
  std::uint64_t search;

  static SeedPlan from(std::uint64_t seed);
};

// Everything that precedes the search: pretrained cascade and the
// train/validation split of the target data.
struct PreparedExperiment {
  SeedPlan seeds;
  model::ModuleList modules;
  data::Dataset source;
  data::Dataset target;
  data::Dataset train;
  data::Dataset val;
  std::vector<model::StagePretrainLoss> pretrain_report;
};

PreparedExperiment prepare_experiment(const ExperimentConfig& cfg);

// Fresh cells over the prepared cascade; identical for identical config.
cell::CellList make_cells(const PreparedExperiment& prep, const ExperimentConfig& cfg);

struct RunOptions {
  bool write_outputs = true;
  // Skips the search and evaluates this scheme after stage-2 style training.
  std::optional<search::Scheme> forced_scheme;
};

struct RunResult {
  ArchitectureDecision decision;
  search::SearchState state;
  search::Scheme scheme;
  std::string metrics_csv;
  double final_val_loss = 0.0;
  std::filesystem::path output_dir;
};

// Pretrain -> split -> stage 1 -> stage 2 -> discretize -> account ->
// export. With write_outputs, writes architecture.json, metrics.csv and
// checkpoints (pretrained, stage1, stage2) to the resolved output directory;
// on failure a FAILED marker holding the error is left there.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Pretrains the cascade and writes `pretrained.{bin,json}`; returns the
// output directory.
std::filesystem::path run_pretrain(const ExperimentConfig& cfg);

struct OracleEntry {
  search::Scheme scheme;
  std::vector<std::string> choices;
  double val_loss = 0.0;
  std::size_t selected_params = 0;
};

// Every discrete assignment of paths to cells, lexicographic order.
std::vector<search::Scheme> scheme_space(const cell::CellList& cells);

// Trains each scheme's network parameters alone under an identical budget
// and seed, and ranks schemes by final validation task loss (ascending, ties
// by scheme order). Throws std::invalid_argument if the space exceeds
// cfg.oracle.cap.
std::vector<OracleEntry> enumerate_oracle(const ExperimentConfig& cfg);
std::vector<OracleEntry> enumerate_oracle(const ExperimentConfig& cfg,
                                          const PreparedExperiment& prep);

// 1-based position of `scheme` in a ranking; 0 if absent.
std::size_t oracle_rank(const std::vector<OracleEntry>& ranking, const search::Scheme& scheme);

std::size_t oracle_epochs(const ExperimentConfig& cfg);

nlohmann::json oracle_to_json(const std::vector<OracleEntry>& ranking);

}  // namespace nfa::harness
