// nfa: adaptive-tuning architecture search over cascaded models.
//
//   nfa run      --config FILE [--seed N] [--out DIR]
//   nfa oracle   --config FILE [--seed N] [--out DIR]
//   nfa compare  --runs A.json B.json
//   nfa pretrain --config FILE [--seed N] [--out DIR]
//
// Relative output directories are placed under $NFA_OUTPUT_ROOT when set.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nfa/harness/config.hpp"
#include "nfa/harness/experiment.hpp"
#include "nfa/harness/report.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Override search.seed");
  cmd->add_option("--out", args.out, "Override output_dir");
}

nfa::harness::ExperimentConfig load(const CommonArgs& args) {
  auto cfg = nfa::harness::load_config(args.config);
  if (args.seed) cfg.search.seed = *args.seed;
  if (args.out) cfg.output_dir = *args.out;
  return cfg;
}

int cmd_run(const CommonArgs& args) {
  auto cfg = load(args);
  auto result = nfa::harness::run_experiment(cfg);
  const auto& d = result.decision;
  std::printf("%-5s %-12s %-14s\n", "cell", "module", "choice");
  for (const auto& c : d.cells) std::printf("%-5zu %-12s %-14s\n", c.index, c.module.c_str(), c.choice.c_str());
  std::printf("total_params=%zu train_params=%zu selected_params=%zu\n", d.totals.total_params,
              d.totals.train_params, d.totals.selected_params);
  std::printf("final_val_loss=%.6f\n", result.final_val_loss);
  std::printf("outputs: %s\n", result.output_dir.string().c_str());
  return 0;
}

int cmd_oracle(const CommonArgs& args) {
  auto cfg = load(args);
  auto ranking = nfa::harness::enumerate_oracle(cfg);
  std::printf("%-5s %-10s %-9s %s\n", "rank", "val_loss", "selected", "scheme");
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::string choices;
    for (const auto& c : ranking[i].choices) choices += (choices.empty() ? "" : " ") + c;
    std::printf("%-5zu %-10.6f %-9zu %s\n", i + 1, ranking[i].val_loss, ranking[i].selected_params,
                choices.c_str());
  }
  const auto out = nfa::harness::resolve_output_dir(cfg.output_dir);
  std::filesystem::create_directories(out);
  nfa::harness::write_text(out / "oracle.json", nfa::harness::oracle_to_json(ranking).dump(2) + "\n");
  std::printf("outputs: %s\n", out.string().c_str());
  return 0;
}

int cmd_compare(const std::vector<std::string>& runs) {
  auto a = nfa::harness::import_architecture(runs.at(0));
  auto b = nfa::harness::import_architecture(runs.at(1));
  std::cout << nfa::harness::format_comparison(a, b);
  return 0;
}

int cmd_pretrain(const CommonArgs& args) {
  auto cfg = load(args);
  auto out = nfa::harness::run_pretrain(cfg);
  std::printf("pretrained checkpoint: %s\n", (out / "pretrained").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Architecture search over frozen / adapter / fine-tune paths of a cascaded model"};
  app.require_subcommand(1);

  CommonArgs run_args, oracle_args, pretrain_args;
  auto* run = app.add_subcommand("run", "Pretrain, search and export the chosen architecture");
  add_common(run, run_args);
  auto* oracle = app.add_subcommand("oracle", "Train and rank every discrete scheme");
  add_common(oracle, oracle_args);
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the upstream stages only");
  add_common(pretrain, pretrain_args);
  std::vector<std::string> runs;
  auto* compare = app.add_subcommand("compare", "Diff two architecture documents per cell");
  compare->add_option("--runs", runs, "Two architecture.json files")
      ->required()
      ->expected(2)
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_args);
    if (*oracle) return cmd_oracle(oracle_args);
    if (*compare) return cmd_compare(runs);
    if (*pretrain) return cmd_pretrain(pretrain_args);
  } catch (const std::exception& e) {
    std::cerr << "nfa: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
