#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nfa/diff/tensor.hpp"

namespace nfa::diff {

// Named collection of leaf tensors. Iteration order is by name, which keeps
// serialization and checksums stable.
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor>;

  void add(const std::string& name, Tensor tensor);
  // Inserts every entry of `other` under `prefix + name`.
  void merge(const ParameterSet& other, const std::string& prefix = "");

  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Total scalar element count over all entries.
  std::size_t count() const;

  void zero_grad();
  // FNV-1a over names and raw value bytes.
  std::uint64_t checksum() const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

 private:
  Map entries_;
};

std::size_t param_count(const ParameterSet& params);

}  // namespace nfa::diff
