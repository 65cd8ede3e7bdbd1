#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "nfa/data/dataset.hpp"

namespace nfa::harness {

enum class Domain { Source, Target };

struct SyntheticParams {
  std::size_t n_samples = 1024;
  std::size_t dim = 16;
  std::size_t num_tokens = 16;
  std::size_t num_labels = 8;
  double noise_source = 0.3;
  double noise_target = 0.5;
  // Lower bound on the per-dimension mean shift of the target domain.
  double shift = 0.5;
  Domain domain = Domain::Source;
  // Fixes prototypes, target shift and relabeling; shared by both domains.
  std::uint64_t world_seed = 17;
};

// Each sample draws a token t uniformly; its clean signal is a fixed +-1
// prototype for t, and the input is the clean signal plus Gaussian noise.
// Source: noise N(0, noise_source^2), label = t mod L.
// Target: noise N(shift_d, noise_target^2) with |shift_d| in [shift, 2*shift)
// per dimension, and labels relabeled through a fixed token permutation.
data::Dataset generate_synthetic(const SyntheticParams& params, std::uint64_t seed);

// Per-dimension target mean shift used by the generator's world.
std::vector<double> target_shift(const SyntheticParams& params);

// CSV rows `label,x0,...,x{dim-1}`; a header line starting with a
// non-numeric field is skipped.
data::Dataset load_dataset_csv(const std::filesystem::path& path, std::size_t dim,
                               std::size_t num_labels);
void save_dataset_csv(const data::Dataset& data, const std::filesystem::path& path);

}  // namespace nfa::harness
