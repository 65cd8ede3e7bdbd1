#include "nfa/diff/parameter_set.hpp"

#include <cstring>
#include <stdexcept>

namespace nfa::diff {

namespace {
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}
}  // namespace

void ParameterSet::add(const std::string& name, Tensor tensor) {
  if (!tensor.defined()) throw std::invalid_argument("ParameterSet: undefined tensor '" + name + "'");
  if (!tensor.is_leaf()) throw std::invalid_argument("ParameterSet: '" + name + "' is not a leaf");
  auto [it, inserted] = entries_.emplace(name, std::move(tensor));
  if (!inserted) throw std::invalid_argument("ParameterSet: duplicate name '" + name + "'");
}

void ParameterSet::merge(const ParameterSet& other, const std::string& prefix) {
  for (const auto& [name, t] : other) add(prefix + name, t);
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParameterSet: no entry '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : entries_) {
    Tensor copy = t;
    copy.zero_grad();
  }
}

std::uint64_t ParameterSet::checksum() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, t] : entries_) {
    fnv_mix(h, name.data(), name.size());
    auto v = t.value();
    fnv_mix(h, v.data(), v.size() * sizeof(double));
  }
  return h;
}

std::size_t param_count(const ParameterSet& params) { return params.count(); }

}  // namespace nfa::diff
