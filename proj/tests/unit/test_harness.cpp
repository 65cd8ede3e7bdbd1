#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "nfa/harness/accounting.hpp"
#include "nfa/harness/checkpoint.hpp"
#include "nfa/harness/config.hpp"
#include "nfa/harness/experiment.hpp"
#include "nfa/harness/report.hpp"
#include "nfa/harness/synthetic.hpp"
#include "nfa/objective/objective.hpp"
#include "support.hpp"

using namespace nfa;
using nlohmann::json;

namespace {

// toy3 example shrunk for unit-test speed.
harness::ExperimentConfig fast_config() {
  auto cfg = testkit::load_example("toy3.json");
  cfg.data.synthetic.target_samples = 256;
  cfg.data.synthetic.source_samples = 256;
  cfg.pretrain.epochs = 5;
  cfg.search.stage1_epochs = 3;
  cfg.search.stage2_epochs = 2;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

harness::SyntheticParams params(harness::Domain d, std::size_t n = 1024) {
  harness::SyntheticParams p;
  p.n_samples = n;
  p.domain = d;
  return p;
}

}  // namespace

TEST(Config, ExamplesLoad) {
  for (const auto& name : {"toy.json", "toy3.json", "toy_na.json"}) {
    EXPECT_NO_THROW(testkit::load_example(name)) << name;
  }
}

TEST(Config, RoundTrip) {
  auto cfg = testkit::load_example("toy.json");
  auto again = harness::config_from_json(harness::to_json(cfg));
  EXPECT_EQ(harness::to_json(again), harness::to_json(cfg));
  EXPECT_EQ(harness::config_hash(again), harness::config_hash(cfg));
}

TEST(Config, UnknownKeyRejectedWithPath) {
  auto j = harness::to_json(testkit::load_example("toy.json"));
  j["search"]["lr_arhc"] = 0.1;
  try {
    harness::config_from_json(j);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("search"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'lr_arhc'"), std::string::npos) << msg;
  }
}

TEST(Config, InvalidValuesRejected) {
  auto base = harness::to_json(testkit::load_example("toy.json"));
  auto bad = [&](auto mutate) {
    auto j = base;
    mutate(j);
    EXPECT_THROW(harness::config_from_json(j), std::invalid_argument) << j.dump();
  };
  bad([](json& j) { j["mode"] = "nfx"; });
  bad([](json& j) { j["adapters"] = json::array(); });
  bad([](json& j) { j["adapters"] = {{"xx"}}; });
  bad([](json& j) { j["search"]["split_ratio"] = 1.0; });
  bad([](json& j) { j["search"]["lr_arch"] = -1.0; });
  bad([](json& j) { j["penalty"]["pfr_policy"] = "third"; });
  bad([](json& j) { j["search"]["batch_size"] = 0; });
  bad([](json& j) { j["data"]["file"] = "/nonexistent/target.csv"; });
  bad([](json& j) { j["mode"] = "na"; j["adapters"] = {{"ba", "ga"}}; });
}

TEST(Config, HashChangesIffConfigChanges) {
  auto a = testkit::load_example("toy.json");
  auto b = testkit::load_example("toy.json");
  EXPECT_EQ(harness::config_hash(a), harness::config_hash(b));
  EXPECT_EQ(harness::config_hash(a).size(), 16u);
  b.search.lr_arch *= 2;
  EXPECT_NE(harness::config_hash(a), harness::config_hash(b));
  b = a;
  b.penalty.pfr = objective::PfrPolicy::zero();
  EXPECT_NE(harness::config_hash(a), harness::config_hash(b));
  b = a;
  b.output_dir = "elsewhere";
  EXPECT_EQ(harness::config_hash(a), harness::config_hash(b));
}

TEST(Config, OutputRootOverride) {
  ::setenv(harness::kOutputRootEnv, "/tmp/root", 1);
  EXPECT_EQ(harness::resolve_output_dir("runs/x"), std::filesystem::path("/tmp/root/runs/x"));
  EXPECT_EQ(harness::resolve_output_dir("/abs/x"), std::filesystem::path("/abs/x"));
  ::unsetenv(harness::kOutputRootEnv);
  EXPECT_EQ(harness::resolve_output_dir("runs/x"), std::filesystem::path("runs/x"));
}

TEST(Synthetic, Deterministic) {
  auto a = harness::generate_synthetic(params(harness::Domain::Target), 5);
  auto b = harness::generate_synthetic(params(harness::Domain::Target), 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].input, b.samples[i].input);
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
  }
}

TEST(Synthetic, TargetShiftAtLeastDelta) {
  auto p = params(harness::Domain::Source, 4000);
  auto src = harness::generate_synthetic(p, 5);
  p.domain = harness::Domain::Target;
  auto tgt = harness::generate_synthetic(p, 5);
  // Same prototypes, so the per-dimension mean gap is the domain shift.
  for (std::size_t d = 0; d < p.dim; ++d) {
    double ms = 0, mt = 0, cs = 0, ct = 0;
    for (const auto& s : src.samples) ms += s.input[d] - s.clean[d];
    for (const auto& s : tgt.samples) mt += s.input[d] - s.clean[d];
    for (const auto& s : src.samples) cs += s.clean[d];
    for (const auto& s : tgt.samples) ct += s.clean[d];
    ms /= static_cast<double>(src.size());
    mt /= static_cast<double>(tgt.size());
    EXPECT_GE(std::abs(mt - ms), p.shift - 0.05) << "dim " << d;
    EXPECT_GE(std::abs(harness::target_shift(p)[d]), p.shift);
    EXPECT_LT(std::abs(harness::target_shift(p)[d]), 2 * p.shift);
  }
}

TEST(Synthetic, AllLabelsPresent) {
  auto d = harness::generate_synthetic(params(harness::Domain::Target, 800), 3);
  std::map<int, int> counts;
  for (const auto& s : d.samples) counts[s.label]++;
  EXPECT_EQ(counts.size(), 8u);
  EXPECT_EQ(counts.begin()->first, 0);
  EXPECT_EQ(counts.rbegin()->first, 7);
}

TEST(Synthetic, InvalidDims) {
  auto p = params(harness::Domain::Source);
  p.dim = 0;
  EXPECT_THROW(harness::generate_synthetic(p, 1), std::invalid_argument);
  p = params(harness::Domain::Source, 0);
  EXPECT_THROW(harness::generate_synthetic(p, 1), std::invalid_argument);
}

TEST(Synthetic, CsvRoundTrip) {
  auto dir = testkit::fresh_temp_dir("csv");
  auto d = harness::generate_synthetic(params(harness::Domain::Target, 20), 3);
  harness::save_dataset_csv(d, dir / "t.csv");
  auto back = harness::load_dataset_csv(dir / "t.csv", 16, 8);
  ASSERT_EQ(back.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(back.samples[i].input, d.samples[i].input);
    EXPECT_EQ(back.samples[i].label, d.samples[i].label);
  }
  std::ofstream(dir / "bad.csv") << "3,1,2\n";
  EXPECT_THROW(harness::load_dataset_csv(dir / "bad.csv", 16, 8), std::invalid_argument);
}

TEST(Checkpoint, BitExactRoundTrip) {
  auto dir = testkit::fresh_temp_dir("ckpt");
  diff::ParameterSet ps;
  ps.add("a", diff::Tensor::parameter({2, 2}, {0.1, -1e-300, 3.0, 1.0 / 3.0}));
  ps.add("b", diff::Tensor::parameter({3}, {5, 6, 7}));
  auto ck = harness::snapshot(ps);
  harness::write_checkpoint(ck, dir / "c");
  EXPECT_TRUE(std::filesystem::exists(dir / "c.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir / "c.json"));
  EXPECT_EQ(harness::read_checkpoint(dir / "c"), ck);

  diff::ParameterSet other;
  other.add("a", diff::Tensor::parameter({2, 2}, {0, 0, 0, 0}));
  other.add("b", diff::Tensor::parameter({3}, {0, 0, 0}));
  harness::restore(ck, other);
  EXPECT_EQ(other.checksum(), ps.checksum());
  diff::ParameterSet wrong;
  wrong.add("a", diff::Tensor::parameter({4}, {0, 0, 0, 0}));
  EXPECT_THROW(harness::restore(ck, wrong), std::invalid_argument);
}

TEST(Accounting, MixedToyDecision) {
  auto modules = model::build_cascade(model::CascadeSpec::toy(), 7);
  auto cells = search::build_cells(modules, cell::CellMode::NFA, {{model::AdapterKind::Bottleneck}}, 1);
  // Pretrained 5*544 + 408; network 5*(544+148) + (408+42); alpha 6*3.
  const search::Scheme scheme{1, 2, 0, 2, 1, 0};
  const auto t = harness::account_params(cells, scheme);
  EXPECT_EQ(t.total_params, 3128u + 3910u + 18u);
  EXPECT_EQ(t.train_params, 3910u + 18u);
  EXPECT_EQ(t.selected_params, 544u + 148u + 0u + 148u + 544u + 0u);
  EXPECT_EQ(harness::account_params(cells, search::Scheme(6, 0)).selected_params, 0u);
  EXPECT_EQ(harness::account_params(cells, search::Scheme(6, 1)).selected_params, 3128u);
}

TEST(Accounting, NaMode) {
  auto modules = model::build_cascade(model::CascadeSpec::toy(), 7);
  auto cells = search::build_cells(modules, cell::CellMode::NA, {{model::AdapterKind::Bottleneck}}, 1);
  const auto t = harness::account_params(cells, search::Scheme(6, 1));
  EXPECT_EQ(t.selected_params, 5u * 148u + 42u);
  EXPECT_EQ(t.train_params, 5u * 148u + 42u + 12u);
  EXPECT_EQ(t.total_params, 3128u + 782u + 12u);
}

TEST(Report, ArchitectureRoundTrip) {
  auto dir = testkit::fresh_temp_dir("arch");
  auto modules = model::build_cascade(model::CascadeSpec::toy(), 7);
  auto cells = search::build_cells(modules, cell::CellMode::NFA, {{model::AdapterKind::Bottleneck}}, 1);
  cells[2].set_alpha({0.1, -0.25, 1.0 / 3.0});
  auto d = harness::make_decision(cells, {0, 1, 2, 0, 1, 2}, objective::PfrPolicy::half(), "abc", 42);
  harness::export_architecture(d, dir / "a.json");
  auto back = harness::import_architecture(dir / "a.json");
  EXPECT_EQ(back, d);
  auto j = json::parse(slurp(dir / "a.json"));
  EXPECT_EQ(j["cells"].size(), 6u);
  EXPECT_EQ(j["cells"][2]["choice"], "adapter:ba");
  EXPECT_EQ(j["cells"][2]["P"]["frozen"], 272);
}

TEST(Report, CompareHighlightsDifferences) {
  auto modules = model::build_cascade(model::CascadeSpec::toy(), 7);
  auto cells = search::build_cells(modules, cell::CellMode::NFA, {{model::AdapterKind::Bottleneck}}, 1);
  auto a = harness::make_decision(cells, {0, 1, 2, 0, 1, 2}, objective::PfrPolicy::half(), "h", 1);
  auto b = harness::make_decision(cells, {0, 1, 2, 0, 0, 2}, objective::PfrPolicy::half(), "h", 2);
  auto diffs = harness::compare_decisions(a, b);
  ASSERT_EQ(diffs.size(), 6u);
  EXPECT_FALSE(diffs[3].differs());
  EXPECT_TRUE(diffs[4].differs());
  EXPECT_NE(harness::format_comparison(a, b).find("1 cell(s) differ"), std::string::npos);
}

TEST(Experiment, ZeroEpochsGivesFrozenScheme) {
  auto cfg = fast_config();
  cfg.search.stage1_epochs = 0;
  cfg.search.stage2_epochs = 0;
  auto r = harness::run_experiment(cfg, {.write_outputs = false});
  EXPECT_EQ(r.scheme, (search::Scheme{0, 0, 0}));
  EXPECT_EQ(r.decision.totals.selected_params, 0u);
  for (const auto& c : r.decision.cells) EXPECT_EQ(c.choice, "frozen");
}

TEST(Experiment, WritesOutputsDeterministically) {
  auto cfg = fast_config();
  auto dir = testkit::fresh_temp_dir("exp");
  cfg.output_dir = (dir / "a").string();
  auto ra = harness::run_experiment(cfg);
  cfg.output_dir = (dir / "b").string();
  auto rb = harness::run_experiment(cfg);
  for (const auto& f : {"metrics.csv", "architecture.json", "pretrained.bin", "checkpoint_stage1.bin",
                        "checkpoint_stage2.bin", "checkpoint_stage2.json"}) {
    ASSERT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "a" / "FAILED"));
  const auto csv = slurp(dir / "a" / "metrics.csv");
  EXPECT_EQ(csv.rfind("epoch,stage,train_loss,val_loss,penalty,selected_params\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 + 2);
  EXPECT_EQ(ra.decision, harness::import_architecture(dir / "a" / "architecture.json"));
}

TEST(Experiment, FailureLeavesMarker) {
  auto cfg = fast_config();
  auto dir = testkit::fresh_temp_dir("fail");
  std::ofstream(dir / "target.csv") << "label,x0\n9,1.0\n";
  cfg.data.file = (dir / "target.csv").string();
  cfg.output_dir = (dir / "out").string();
  EXPECT_ANY_THROW(harness::run_experiment(cfg));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "FAILED"));
}

TEST(Experiment, AccountingMatchesGradientRecipients) {
  auto cfg = fast_config();
  auto prep = harness::prepare_experiment(cfg);
  auto cells = harness::make_cells(prep, cfg);
  std::mt19937_64 rng(5);
  testkit::randomize(search::network_params(cells), rng);
  for (const auto& scheme : harness::scheme_space(cells)) {
    auto params = search::scheme_params(cells, scheme);
    auto batch = data::full_batch(prep.val);
    params.zero_grad();
    auto loss = objective::task_loss(search::scheme_forward(cells, batch.inputs, scheme), batch.labels);
    diff::backward(loss);
    std::size_t with_grad = 0;
    auto net = search::network_params(cells);
    for (const auto& [name, t] : net) {
      if (t.has_grad() && std::any_of(t.grad().begin(), t.grad().end(), [](double g) { return g != 0.0; })) {
        with_grad += t.numel();
      }
    }
    net.zero_grad();
    EXPECT_EQ(with_grad, harness::account_params(cells, scheme).selected_params);
  }
}

TEST(Oracle, EnumeratesAndRanks) {
  auto cfg = fast_config();
  cfg.oracle.epochs = 5;
  auto prep = harness::prepare_experiment(cfg);
  auto ranking = harness::enumerate_oracle(cfg, prep);
  ASSERT_EQ(ranking.size(), 27u);
  for (std::size_t i = 1; i < ranking.size(); ++i) EXPECT_LE(ranking[i - 1].val_loss, ranking[i].val_loss);
  auto find = [&](search::Scheme s) {
    return ranking.at(harness::oracle_rank(ranking, s) - 1).val_loss;
  };
  const double frozen = find({0, 0, 0});
  EXPECT_NEAR(frozen, std::log(8.0), 0.35);
  EXPECT_LE(find({1, 1, 1}), frozen);
  EXPECT_EQ(harness::enumerate_oracle(cfg, prep).front().scheme, ranking.front().scheme);
}

TEST(Oracle, CapEnforced) {
  auto cfg = fast_config();
  cfg.cascade = model::CascadeSpec::toy();
  EXPECT_THROW(harness::enumerate_oracle(cfg), std::invalid_argument);  // 3^6 = 729 > 243
}
