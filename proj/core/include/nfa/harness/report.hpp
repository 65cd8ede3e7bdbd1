#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfa/harness/accounting.hpp"
#include "nfa/search/search.hpp"

namespace nfa::harness {

nlohmann::json decision_to_json(const ArchitectureDecision& d);
ArchitectureDecision decision_from_json(const nlohmann::json& j);

// Writes the architecture document; throws std::runtime_error naming the
// path on I/O failure.
void export_architecture(const ArchitectureDecision& d, const std::filesystem::path& path);
ArchitectureDecision import_architecture(const std::filesystem::path& path);

// One row per epoch:
// epoch,stage,train_loss,val_loss,penalty,selected_params
std::string metrics_csv(const std::vector<search::EpochRecord>& history);

void write_text(const std::filesystem::path& path, const std::string& text);

struct CellDiff {
  std::size_t index = 0;
  std::string module;
  std::string choice_a;
  std::string choice_b;
  bool differs() const { return choice_a != choice_b; }
};

// Per-cell comparison of two decisions over the same cascade.
std::vector<CellDiff> compare_decisions(const ArchitectureDecision& a, const ArchitectureDecision& b);
std::string format_comparison(const ArchitectureDecision& a, const ArchitectureDecision& b);

}  // namespace nfa::harness
