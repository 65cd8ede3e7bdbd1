#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nfa/diff/parameter_set.hpp"

namespace nfa::harness {

struct StoredTensor {
  diff::Shape shape;
  std::vector<double> values;

  bool operator==(const StoredTensor&) const = default;
};

using Checkpoint = std::map<std::string, StoredTensor>;

Checkpoint snapshot(const diff::ParameterSet& params);

// `<base>.bin` holds the raw little-endian float64 values back to back;
// `<base>.json` is the manifest (name, shape, offset, count per tensor).
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& base);
Checkpoint read_checkpoint(const std::filesystem::path& base);

// Copies stored values into matching entries of `params`; throws if a name
// is missing or a shape differs.
void restore(const Checkpoint& ckpt, diff::ParameterSet& params);

}  // namespace nfa::harness
