#pragma once

#include <cstddef>
#include <string>

namespace nfa::objective {

// How many parameters the frozen path is charged in the parameter penalty.
enum class PfrPolicyKind { Zero, Constant, HalfFineTune };

struct PfrPolicy {
  PfrPolicyKind kind = PfrPolicyKind::HalfFineTune;
  std::size_t constant = 0;  // used by Constant only

  // Charged count for the frozen path of a module with `finetune_count`
  // parameters. HalfFineTune floors.
  std::size_t frozen_count(std::size_t finetune_count) const;

  static PfrPolicy zero() { return {PfrPolicyKind::Zero, 0}; }
  static PfrPolicy fixed(std::size_t c) { return {PfrPolicyKind::Constant, c}; }
  static PfrPolicy half() { return {PfrPolicyKind::HalfFineTune, 0}; }

  bool operator==(const PfrPolicy&) const = default;
};

// "zero" | "constant" | "half"
const char* to_string(PfrPolicyKind kind);
PfrPolicyKind parse_pfr_policy(const std::string& name);

struct PenaltyConfig {
  PfrPolicy pfr = PfrPolicy::half();
  double lambda = 1.0;
  bool enabled = true;

  bool operator==(const PenaltyConfig&) const = default;
};

}  // namespace nfa::objective
