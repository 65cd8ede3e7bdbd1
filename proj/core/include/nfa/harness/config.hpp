#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfa/cell/nfa_cell.hpp"
#include "nfa/model/adapter.hpp"
#include "nfa/model/cascade.hpp"
#include "nfa/objective/penalty_config.hpp"
#include "nfa/search/search.hpp"

namespace nfa::harness {

struct SyntheticDataConfig {
  std::size_t target_samples = 1024;
  std::size_t source_samples = 1024;
  std::size_t num_tokens = 16;
  double noise_source = 0.3;
  double noise_target = 0.5;
  double shift = 0.5;
  std::uint64_t world_seed = 17;

  bool operator==(const SyntheticDataConfig&) const = default;
};

// Target-domain data comes either from the synthetic generator or from a CSV
// file with rows `label,x0,...,x{d-1}`. Pretraining always uses synthetic
// source-domain data.
struct DataConfig {
  SyntheticDataConfig synthetic;
  std::string file;  // empty: synthetic target data

  bool operator==(const DataConfig&) const = default;
};

struct OracleConfig {
  std::size_t cap = 243;
  // Training epochs per scheme; defaults to the stage-2 budget.
  std::optional<std::size_t> epochs;

  bool operator==(const OracleConfig&) const = default;
};

struct ExperimentConfig {
  model::CascadeSpec cascade = model::CascadeSpec::toy();
  cell::CellMode mode = cell::CellMode::NFA;
  // One list applies to every cell; otherwise one list per cell.
  std::vector<std::vector<model::AdapterKind>> adapters = {{model::AdapterKind::Bottleneck}};
  objective::PenaltyConfig penalty;
  search::SearchConfig search;
  model::PretrainConfig pretrain;
  DataConfig data;
  OracleConfig oracle;
  std::string output_dir = "runs/default";

  void validate() const;
};

// Strict parse: unknown keys anywhere are rejected with their JSON path.
// Relative data file paths resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

// 16 hex digits of FNV-1a over the canonical (sorted-key) JSON form,
// excluding output_dir.
std::string config_hash(const ExperimentConfig& cfg);

// Resolves the run's output directory, honoring NFA_OUTPUT_ROOT for relative
// paths.
std::filesystem::path resolve_output_dir(const std::string& dir);

inline constexpr const char* kOutputRootEnv = "NFA_OUTPUT_ROOT";

}  // namespace nfa::harness
