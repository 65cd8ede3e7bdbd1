#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nfa/diff/parameter_set.hpp"

namespace nfa::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter first/second moment buffers. Step counts are tracked per
// entry so a subset of a group can be stepped without skewing bias
// correction for the rest.
class AdamState {
 public:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t steps = 0;
  };

  Moments& moments_for(const std::string& name, std::size_t size);
  const std::map<std::string, Moments>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::map<std::string, Moments> entries_;
};

// In-place bias-corrected adaptive-moment update of every entry in `params`.
// Throws std::logic_error if any entry has no gradient. Gradients are left in
// place; the caller zeroes them.
void adam_step(ParameterSet& params, const AdamConfig& cfg, AdamState& state);

}  // namespace nfa::diff
