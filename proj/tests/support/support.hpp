#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nfa/cell/nfa_cell.hpp"
#include "nfa/diff/tensor.hpp"
#include "nfa/harness/config.hpp"
#include "nfa/objective/penalty_config.hpp"
#include "nfa/search/supernet.hpp"

namespace nfa::testkit {

// Central finite-difference check of the gradients of the scalar `loss`
// with respect to `params`. Per tensor the error is
// ||analytic - numeric|| / max(||analytic|| + ||numeric||, floor);
// returns the largest over all tensors.
struct GradcheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "param#index" of the worst tensor
};
GradcheckResult gradcheck(const std::function<diff::Tensor()>& loss,
                          const std::vector<diff::Tensor>& params, double h = 1e-5,
                          double floor = 1e-8);

struct NamedError {
  std::string name;
  double error = 0.0;
};

// Gradchecks every differentiable op kind (and broadcast variants) on random
// inputs drawn from `seed`.
std::vector<NamedError> op_gradchecks(std::uint64_t seed);

// Gradcheck of a full cell forward (input, alpha and every network tensor)
// with randomized parameters and soft noise-free weights.
double cell_gradcheck(std::uint64_t seed, cell::CellMode mode);

// Random values in [lo, hi], optionally rejecting |v| < min_abs.
std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                  double hi = 1.0, double min_abs = 0.0);

// Overwrites every tensor of the set with random values.
void randomize(const diff::ParameterSet& params, std::mt19937_64& rng, double scale = 0.5);

// Checksums of the three parameter groups of a cell list.
struct GroupChecksums {
  std::uint64_t alpha = 0;
  std::uint64_t network = 0;
  std::uint64_t pretrained = 0;
  bool operator==(const GroupChecksums&) const = default;
};
GroupChecksums group_checksums(const cell::CellList& cells);

// Optimizes alpha against the parameter penalty alone (no task loss) with
// hard Gumbel-softmax samples, as the search's architecture step would.
struct PenaltyDescentConfig {
  std::size_t steps = 2000;
  double lr = 0.05;
  double tau = 1.0;
  std::uint64_t seed = 0;
};
search::Scheme penalty_only_descent(cell::CellList& cells, const objective::PfrPolicy& policy,
                                    const PenaltyDescentConfig& cfg);

// Expected converged path per cell under penalty-only optimization: the
// path with the smallest charged count, ties broken like discretize().
search::Scheme cheapest_scheme(const cell::CellList& cells, const objective::PfrPolicy& policy);

// Shipped example configs.
std::filesystem::path config_dir();
harness::ExperimentConfig load_example(const std::string& name);

// Fresh empty temporary directory under the system temp path.
std::filesystem::path fresh_temp_dir(const std::string& tag);

}  // namespace nfa::testkit
