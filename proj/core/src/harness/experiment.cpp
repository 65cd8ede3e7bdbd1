#include "nfa/harness/experiment.hpp"

#include <algorithm>
#include <stdexcept>

#include "nfa/harness/checkpoint.hpp"
#include "nfa/harness/report.hpp"
#include "nfa/harness/synthetic.hpp"

namespace nfa::harness {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

SyntheticParams synthetic_params(const ExperimentConfig& cfg, Domain domain) {
  const auto& s = cfg.data.synthetic;
  SyntheticParams p;
  p.n_samples = domain == Domain::Source ? s.source_samples : s.target_samples;
  p.dim = cfg.cascade.input_dim();
  p.num_tokens = s.num_tokens;
  p.num_labels = cfg.cascade.num_labels;
  p.noise_source = s.noise_source;
  p.noise_target = s.noise_target;
  p.shift = s.shift;
  p.domain = domain;
  p.world_seed = s.world_seed;
  return p;
}

}  // namespace

SeedPlan SeedPlan::from(std::uint64_t seed) {
  return {derive(seed, 1), derive(seed, 2), derive(seed, 3), derive(seed, 4),
          derive(seed, 5), derive(seed, 6), derive(seed, 7)};
}

PreparedExperiment prepare_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedExperiment p;
  p.seeds = SeedPlan::from(cfg.search.seed);
  p.modules = model::build_cascade(cfg.cascade, p.seeds.cascade);
  p.source = generate_synthetic(synthetic_params(cfg, Domain::Source), p.seeds.source_data);
  if (cfg.data.file.empty()) {
    p.target = generate_synthetic(synthetic_params(cfg, Domain::Target), p.seeds.target_data);
  } else {
    p.target = load_dataset_csv(cfg.data.file, cfg.cascade.input_dim(), cfg.cascade.num_labels);
  }
  model::PretrainConfig pre = cfg.pretrain;
  pre.seed = p.seeds.pretrain;
  p.pretrain_report = model::pretrain_upstream(p.modules, p.source, pre);
  std::tie(p.train, p.val) = search::split_dataset(p.target, cfg.search.split_ratio, p.seeds.split);
  if (p.train.empty() || p.val.empty()) {
    throw std::invalid_argument("target data too small for split ratio " +
                                std::to_string(cfg.search.split_ratio));
  }
  return p;
}

cell::CellList make_cells(const PreparedExperiment& prep, const ExperimentConfig& cfg) {
  return search::build_cells(prep.modules, cfg.mode, cfg.adapters, prep.seeds.cells);
}

std::size_t oracle_epochs(const ExperimentConfig& cfg) {
  if (cfg.oracle.epochs) return *cfg.oracle.epochs;
  return cfg.search.stage2_epochs > 0 ? cfg.search.stage2_epochs : cfg.search.stage1_epochs;
}

namespace {

diff::ParameterSet all_search_params(const cell::CellList& cells) {
  auto ps = search::network_params(cells);
  ps.merge(search::arch_params(cells));
  return ps;
}

diff::ParameterSet pretrained_params(const model::ModuleList& modules) {
  diff::ParameterSet ps;
  for (const auto& m : modules) ps.merge(m->pretrained_params(), m->name() + ".");
  return ps;
}

RunResult run_pipeline(const ExperimentConfig& cfg, const RunOptions& opts,
                       const std::filesystem::path& out) {
  auto prep = prepare_experiment(cfg);
  if (opts.write_outputs) {
    write_checkpoint(snapshot(pretrained_params(prep.modules)), out / "pretrained");
  }
  auto cells = make_cells(prep, cfg);
  RunResult result;
  result.output_dir = out;
  if (opts.forced_scheme) {
    result.scheme = *opts.forced_scheme;
    search::train_fixed_scheme(cells, result.scheme, prep.train, oracle_epochs(cfg),
                               cfg.search.lr_network, cfg.search.batch_size, prep.seeds.search);
  } else {
    search::SearchConfig scfg = cfg.search;
    scfg.seed = prep.seeds.search;
    search::BilevelSearch search(cells, prep.train, prep.val, scfg, cfg.penalty);
    search.run_stage1();
    if (opts.write_outputs) write_checkpoint(snapshot(all_search_params(cells)), out / "checkpoint_stage1");
    if (cfg.search.stage2_epochs > 0) {
      search.run_stage2();
      if (opts.write_outputs) write_checkpoint(snapshot(all_search_params(cells)), out / "checkpoint_stage2");
    }
    result.state = search.state();
    result.scheme = search.discretization();
  }
  result.final_val_loss = search::scheme_task_loss(cells, result.scheme, prep.val);
  result.decision = make_decision(cells, result.scheme, cfg.penalty.pfr, config_hash(cfg), cfg.search.seed);
  result.metrics_csv = metrics_csv(result.state.history);
  if (opts.write_outputs) {
    export_architecture(result.decision, out / "architecture.json");
    write_text(out / "metrics.csv", result.metrics_csv);
  }
  return result;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto out = resolve_output_dir(cfg.output_dir);
  if (!opts.write_outputs) return run_pipeline(cfg, opts, out);
  std::filesystem::create_directories(out);
  std::filesystem::remove(out / "FAILED");
  try {
    return run_pipeline(cfg, opts, out);
  } catch (const std::exception& e) {
    try {
      write_text(out / "FAILED", std::string(e.what()) + "\n");
    } catch (...) {
    }
    throw;
  }
}

std::filesystem::path run_pretrain(const ExperimentConfig& cfg) {
  const auto out = resolve_output_dir(cfg.output_dir);
  std::filesystem::create_directories(out);
  auto prep = prepare_experiment(cfg);
  write_checkpoint(snapshot(pretrained_params(prep.modules)), out / "pretrained");
  return out;
}

std::vector<search::Scheme> scheme_space(const cell::CellList& cells) {
  std::vector<search::Scheme> out;
  search::Scheme current(cells.size(), 0);
  if (cells.empty()) return out;
  while (true) {
    out.push_back(current);
    std::size_t i = cells.size();
    while (i > 0) {
      --i;
      if (++current[i] < cells[i].path_count()) break;
      current[i] = 0;
      if (i == 0) return out;
    }
  }
}

std::vector<OracleEntry> enumerate_oracle(const ExperimentConfig& cfg) {
  return enumerate_oracle(cfg, prepare_experiment(cfg));
}

std::vector<OracleEntry> enumerate_oracle(const ExperimentConfig& cfg,
                                          const PreparedExperiment& prep) {
  std::size_t space = 1;
  {
    auto probe = make_cells(prep, cfg);
    for (const auto& c : probe) {
      space *= c.path_count();
      if (space > cfg.oracle.cap) {
        throw std::invalid_argument("oracle: scheme space exceeds cap of " +
                                    std::to_string(cfg.oracle.cap) +
                                    "; shrink the cascade or the adapter candidate list");
      }
    }
  }
  const std::size_t epochs = oracle_epochs(cfg);
  std::vector<OracleEntry> out;
  auto schemes = scheme_space(make_cells(prep, cfg));
  for (const auto& scheme : schemes) {
    auto cells = make_cells(prep, cfg);
    search::train_fixed_scheme(cells, scheme, prep.train, epochs, cfg.search.lr_network,
                               cfg.search.batch_size, prep.seeds.search);
    OracleEntry e;
    e.scheme = scheme;
    for (std::size_t i = 0; i < cells.size(); ++i) e.choices.push_back(cells[i].path_label(scheme[i]));
    e.val_loss = search::scheme_task_loss(cells, scheme, prep.val);
    e.selected_params = search::selected_param_count(cells, scheme);
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const OracleEntry& a, const OracleEntry& b) { return a.val_loss < b.val_loss; });
  return out;
}

std::size_t oracle_rank(const std::vector<OracleEntry>& ranking, const search::Scheme& scheme) {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].scheme == scheme) return i + 1;
  }
  return 0;
}

nlohmann::json oracle_to_json(const std::vector<OracleEntry>& ranking) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& e = ranking[i];
    arr.push_back({{"rank", i + 1},
                   {"scheme", e.scheme},
                   {"choices", e.choices},
                   {"val_loss", e.val_loss},
                   {"selected_params", e.selected_params}});
  }
  return {{"ranking", arr}};
}

}  // namespace nfa::harness
