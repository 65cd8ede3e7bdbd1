#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nfa/diff/tensor.hpp"

namespace nfa::data {

struct Sample {
  std::size_t id = 0;
  std::vector<double> input;
  // Auxiliary targets used only for upstream pretraining; empty / -1 when
  // the data came from a file.
  std::vector<double> clean;
  int token = -1;
  int label = 0;
};

struct Dataset {
  std::size_t input_dim = 0;
  std::size_t num_labels = 0;
  std::size_t num_tokens = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  // Throws std::invalid_argument on ragged rows or out-of-range labels.
  void validate() const;
};

struct Batch {
  diff::Tensor inputs;  // (batch, input_dim)
  diff::Tensor clean;   // (batch, input_dim), undefined if unavailable
  std::vector<int> labels;
  std::vector<int> tokens;
  std::vector<std::size_t> ids;

  std::size_t size() const { return ids.size(); }
};

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices);
Batch full_batch(const Dataset& data);

// Sub-dataset holding the given rows, ids preserved.
Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace nfa::data
