#include "nfa/data/dataset.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace nfa::data {

void Dataset::validate() const {
  for (const auto& s : samples) {
    if (s.input.size() != input_dim) {
      throw std::invalid_argument("dataset: sample " + std::to_string(s.id) + " has " +
                                  std::to_string(s.input.size()) + " inputs, expected " +
                                  std::to_string(input_dim));
    }
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_labels) {
      throw std::invalid_argument("dataset: sample " + std::to_string(s.id) + " label " +
                                  std::to_string(s.label) + " outside [0, " +
                                  std::to_string(num_labels) + ")");
    }
  }
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  const std::size_t d = data.input_dim;
  std::vector<double> in;
  std::vector<double> clean;
  in.reserve(indices.size() * d);
  bool has_clean = true;
  Batch b;
  for (auto i : indices) {
    const Sample& s = data.samples.at(i);
    in.insert(in.end(), s.input.begin(), s.input.end());
    if (s.clean.size() == d) {
      clean.insert(clean.end(), s.clean.begin(), s.clean.end());
    } else {
      has_clean = false;
    }
    b.labels.push_back(s.label);
    b.tokens.push_back(s.token);
    b.ids.push_back(s.id);
  }
  const std::size_t n = indices.size();
  b.inputs = diff::Tensor::constant({n, d}, std::move(in));
  if (has_clean) b.clean = diff::Tensor::constant({n, d}, std::move(clean));
  return b;
}

Batch full_batch(const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_batch(data, idx);
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.input_dim = data.input_dim;
  out.num_labels = data.num_labels;
  out.num_tokens = data.num_tokens;
  out.samples.reserve(indices.size());
  for (auto i : indices) out.samples.push_back(data.samples.at(i));
  return out;
}

}  // namespace nfa::data
