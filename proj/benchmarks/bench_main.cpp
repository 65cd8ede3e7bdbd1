#include <benchmark/benchmark.h>

#include <random>

#include "nfa/diff/ops.hpp"
#include "nfa/harness/config.hpp"
#include "nfa/harness/experiment.hpp"
#include "nfa/search/search.hpp"

using namespace nfa;

namespace {

std::vector<double> uniform(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = diff::Tensor::parameter({n, n}, uniform(n * n, 1));
  auto b = diff::Tensor::parameter({n, n}, uniform(n * n, 2));
  for (auto _ : state) {
    auto loss = diff::sum(diff::matmul(a, b));
    diff::backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64);

void BM_CellForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(3);
  auto module = std::make_shared<model::NetModule>(model::ModuleSpec{.name = "m", .dims = {16, 16, 16}}, 0, rng);
  module->freeze();
  cell::NfaCell c(0, module, cell::CellMode::NFA, {model::AdapterKind::Bottleneck}, rng);
  const auto batch = static_cast<std::size_t>(state.range(0));
  auto x = diff::Tensor::constant({batch, 16}, uniform(batch * 16, 4));
  for (auto _ : state) {
    auto w = cell::gumbel_softmax(c.alpha(), 1.0, rng, true, true);
    auto loss = diff::mean(c.forward(x, w));
    diff::backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_CellForwardBackward)->Arg(32)->Arg(128);

struct SearchFixture {
  harness::ExperimentConfig cfg;
  harness::PreparedExperiment prep;
  cell::CellList cells;

  SearchFixture() {
    cfg.data.synthetic.target_samples = 256;
    cfg.data.synthetic.source_samples = 256;
    cfg.pretrain.epochs = 1;
    prep = harness::prepare_experiment(cfg);
    cells = harness::make_cells(prep, cfg);
  }
};

void BM_ArchStep(benchmark::State& state) {
  SearchFixture f;
  search::BilevelSearch s(f.cells, f.prep.train, f.prep.val, f.cfg.search, f.cfg.penalty);
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto batch = data::make_batch(f.prep.val, idx);
  for (auto _ : state) benchmark::DoNotOptimize(s.arch_step(batch, 1.0));
}
BENCHMARK(BM_ArchStep);

void BM_NetStep(benchmark::State& state) {
  SearchFixture f;
  search::BilevelSearch s(f.cells, f.prep.train, f.prep.val, f.cfg.search, f.cfg.penalty);
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto batch = data::make_batch(f.prep.train, idx);
  for (auto _ : state) benchmark::DoNotOptimize(s.net_step(batch, 1.0));
}
BENCHMARK(BM_NetStep);

void BM_FixedStep(benchmark::State& state) {
  SearchFixture f;
  search::BilevelSearch s(f.cells, f.prep.train, f.prep.val, f.cfg.search, f.cfg.penalty);
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto batch = data::make_batch(f.prep.train, idx);
  const search::Scheme scheme{1, 2, 0, 2, 1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(s.fixed_step(batch, scheme));
}
BENCHMARK(BM_FixedStep);

}  // namespace

BENCHMARK_MAIN();
