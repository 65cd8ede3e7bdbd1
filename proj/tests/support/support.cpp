#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "nfa/diff/adam.hpp"
#include "nfa/diff/losses.hpp"
#include "nfa/diff/ops.hpp"
#include "nfa/objective/objective.hpp"

namespace nfa::testkit {

GradcheckResult gradcheck(const std::function<diff::Tensor()>& loss,
                          const std::vector<diff::Tensor>& params, double h, double floor) {
  for (const auto& p : params) p.node()->grad.clear();
  diff::backward(loss());
  GradcheckResult result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    const auto& p = params[t];
    std::vector<double> analytic(p.numel(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto values = p.node()->value.data();
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double orig = values[i];
      values[i] = orig + h;
      const double up = loss().item();
      values[i] = orig - h;
      const double down = loss().item();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      diff_sq += (analytic[i] - numeric) * (analytic[i] - numeric);
      a_sq += analytic[i] * analytic[i];
      n_sq += numeric * numeric;
    }
    const double err = std::sqrt(diff_sq) / std::max(std::sqrt(a_sq) + std::sqrt(n_sq), floor);
    if (t == 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = "param#" + std::to_string(t);
    }
  }
  return result;
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo, double hi,
                                  double min_abs) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) {
    do {
      v = dist(rng);
    } while (std::abs(v) < min_abs);
  }
  return out;
}

void randomize(const diff::ParameterSet& params, std::mt19937_64& rng, double scale) {
  for (const auto& [name, t] : params) {
    auto vals = random_values(rng, t.numel(), -scale, scale);
    std::copy(vals.begin(), vals.end(), t.node()->value.begin());
  }
}

namespace {

using diff::Tensor;

Tensor rand_param(std::mt19937_64& rng, diff::Shape shape, double lo = -1.0, double hi = 1.0,
                  double min_abs = 0.0) {
  return Tensor::parameter(shape, random_values(rng, diff::numel(shape), lo, hi, min_abs));
}

// sum(y * R) for a fixed random R, so every output element matters.
Tensor weighted(const Tensor& y, const Tensor& r) { return diff::sum(diff::mul(y, r)); }

}  // namespace

std::vector<NamedError> op_gradchecks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t B = 3, D = 4;
  std::vector<NamedError> out;
  auto r = [&](diff::Shape s) { return Tensor::constant(s, random_values(rng, diff::numel(s))); };
  auto check = [&](const char* name, const std::function<Tensor()>& f, std::vector<Tensor> ps) {
    out.push_back({name, gradcheck(f, ps).max_rel_error});
  };
  {
    auto a = rand_param(rng, {B, D}), b = rand_param(rng, {D, 2});
    auto R = r({B, 2});
    check("matmul", [&] { return weighted(diff::matmul(a, b), R); }, {a, b});
  }
  {
    auto a = rand_param(rng, {B, D}), b = rand_param(rng, {B, D}), bias = rand_param(rng, {D}),
         s = rand_param(rng, {1});
    auto R = r({B, D});
    check("add", [&] { return weighted(diff::add(a, b), R); }, {a, b});
    check("add/broadcast", [&] { return weighted(diff::add(a, bias), R); }, {a, bias});
    check("add/scalar", [&] { return weighted(diff::add(a, s), R); }, {a, s});
    check("sub", [&] { return weighted(diff::sub(a, b), R); }, {a, b});
    check("mul", [&] { return weighted(diff::mul(a, b), R); }, {a, b});
    check("mul/broadcast", [&] { return weighted(diff::mul(a, bias), R); }, {a, bias});
    check("mul/scalar", [&] { return weighted(diff::mul(a, s), R); }, {a, s});
  }
  {
    auto x = rand_param(rng, {B, D}, -2.0, 2.0, 1e-2);
    auto pos = rand_param(rng, {B, D}, 0.2, 2.0);
    auto R = r({B, D});
    check("relu", [&] { return weighted(diff::relu(x), R); }, {x});
    check("tanh", [&] { return weighted(diff::tanh(x), R); }, {x});
    check("sigmoid", [&] { return weighted(diff::sigmoid(x), R); }, {x});
    check("softmax", [&] { return weighted(diff::softmax_lastdim(x), R); }, {x});
    check("log_softmax", [&] { return weighted(diff::log_softmax_lastdim(x), R); }, {x});
    check("log", [&] { return weighted(diff::log(pos), R); }, {pos});
    check("sum", [&] { return diff::mul(diff::sum(diff::mul(x, x)), Tensor::scalar(0.7)); }, {x});
    check("mean", [&] { return diff::mean(diff::mul(x, R)); }, {x});
    check("scale", [&] { return weighted(diff::scale(x, -1.7), R); }, {x});
    auto R2 = r({B, 2});
    check("slice", [&] { return weighted(diff::slice_lastdim(x, 1, 3), R2); }, {x});
  }
  {
    auto a = rand_param(rng, {B, 2}), b = rand_param(rng, {B, 3});
    auto R = r({B, 5});
    check("concat", [&] {
      std::vector<Tensor> parts{a, b};
      return weighted(diff::concat_lastdim(parts), R);
    }, {a, b});
  }
  {
    auto logits = rand_param(rng, {B, 5}, -2.0, 2.0);
    std::vector<int> labels{0, 3, 4};
    check("nll", [&] { return diff::nll_mean(diff::log_softmax_lastdim(logits), labels); }, {logits});
    auto target = r({B, 5});
    check("mse", [&] { return diff::mse_mean(logits, target); }, {logits});
  }
  return out;
}

double cell_gradcheck(std::uint64_t seed, cell::CellMode mode) {
  using model::AdapterKind;
  std::mt19937_64 rng(seed);
  model::ModuleSpec spec{.name = "m", .dims = {16, 16, 16}};
  auto module = std::make_shared<model::NetModule>(spec, 0, rng);
  module->freeze();
  auto adapters = mode == cell::CellMode::NFA
                      ? std::vector<AdapterKind>{AdapterKind::Bottleneck, AdapterKind::Gated}
                      : std::vector<AdapterKind>{AdapterKind::Gated};
  cell::NfaCell c(0, module, mode, adapters, rng);
  randomize(c.network_params(), rng);
  c.set_alpha(random_values(rng, c.path_count()));
  auto x = Tensor::parameter({3, 16}, random_values(rng, 48));
  auto R = Tensor::constant({3, 16}, random_values(rng, 48));
  auto loss = [&] {
    std::mt19937_64 unused(0);
    auto w = cell::gumbel_softmax(c.alpha(), 0.7, unused, false, false);
    return weighted(c.forward(x, w), R);
  };
  std::vector<Tensor> params{x, c.alpha()};
  for (const auto& [name, t] : c.network_params()) params.push_back(t);
  return gradcheck(loss, params).max_rel_error;
}

GroupChecksums group_checksums(const cell::CellList& cells) {
  diff::ParameterSet pretrained;
  for (const auto& c : cells) {
    pretrained.merge(c.module().pretrained_params(), "cell" + std::to_string(c.index()) + ".");
  }
  return {search::arch_params(cells).checksum(), search::network_params(cells).checksum(),
          pretrained.checksum()};
}

search::Scheme penalty_only_descent(cell::CellList& cells, const objective::PfrPolicy& policy,
                                    const PenaltyDescentConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  auto alpha = search::arch_params(cells);
  diff::AdamState state;
  const diff::AdamConfig adam{.lr = cfg.lr};
  objective::PenaltyConfig pen{.pfr = policy, .lambda = 1.0, .enabled = true};
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    auto weights = search::sample_weights(cells, cfg.tau, rng, /*hard=*/true, /*noise=*/true);
    alpha.zero_grad();
    diff::backward(objective::penalty(cells, weights, pen));
    diff::adam_step(alpha, adam, state);
  }
  return search::discretize_all(cells);
}

search::Scheme cheapest_scheme(const cell::CellList& cells, const objective::PfrPolicy& policy) {
  search::Scheme out;
  for (const auto& c : cells) {
    const auto charged = c.path_param_counts(policy);
    const auto trainable = c.trainable_counts();
    std::size_t best = 0;
    for (std::size_t k = 1; k < charged.size(); ++k) {
      if (charged[k] < charged[best] ||
          (charged[k] == charged[best] && trainable[k] < trainable[best])) {
        best = k;
      }
    }
    out.push_back(best);
  }
  return out;
}

std::filesystem::path config_dir() { return NFA_CONFIG_DIR; }

harness::ExperimentConfig load_example(const std::string& name) {
  return harness::load_config(config_dir() / name);
}

std::filesystem::path fresh_temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("nfa_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace nfa::testkit
