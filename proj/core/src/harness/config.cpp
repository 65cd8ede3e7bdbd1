#include "nfa/harness/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

namespace nfa::harness {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw std::invalid_argument("config" + (path.empty() ? std::string() : " " + path) + ": " + msg);
}

// Reads known keys from a JSON object and rejects the rest on finish().
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void opt(const std::string& key, T& out) {
    if (const json* v = get(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception& e) {
        config_error(child(key), e.what());
      }
    }
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) config_error(path_, "unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

model::ModuleSpec parse_module(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  model::ModuleSpec m;
  r.opt("name", m.name);
  r.opt("dims", m.dims);
  std::string hidden = "tanh";
  std::string output = "tanh";
  r.opt("hidden_activation", hidden);
  r.opt("output_activation", output);
  r.finish();
  try {
    m.hidden_activation = model::parse_activation(hidden);
    m.output_activation = model::parse_activation(output);
  } catch (const std::invalid_argument& e) {
    config_error(path, e.what());
  }
  return m;
}

model::CascadeSpec parse_cascade(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  model::CascadeSpec spec;
  std::string preset;
  r.opt("preset", preset);
  const json* stages = r.get("stages");
  const json* labels = r.get("labels");
  r.finish();
  if (!preset.empty()) {
    if (stages || labels) config_error(path, "'preset' excludes 'stages' and 'labels'");
    if (preset == "toy") return model::CascadeSpec::toy();
    if (preset == "toy3") return model::CascadeSpec::toy_three_cell();
    config_error(path + ".preset", "unknown preset '" + preset + "' (expected toy or toy3)");
  }
  if (!stages || !stages->is_array()) config_error(path, "needs 'preset' or a 'stages' array");
  if (labels) spec.num_labels = labels->get<std::size_t>();
  for (std::size_t s = 0; s < stages->size(); ++s) {
    const std::string sp = path + ".stages[" + std::to_string(s) + "]";
    ObjectReader sr((*stages)[s], sp);
    model::StageSpec stage;
    sr.opt("name", stage.name);
    const json* modules = sr.get("modules");
    sr.finish();
    if (!modules || !modules->is_array()) config_error(sp, "needs a 'modules' array");
    for (std::size_t m = 0; m < modules->size(); ++m) {
      stage.modules.push_back(parse_module((*modules)[m], sp + ".modules[" + std::to_string(m) + "]"));
    }
    spec.stages.push_back(std::move(stage));
  }
  return spec;
}

std::vector<std::vector<model::AdapterKind>> parse_adapters(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) config_error(path, "expected a non-empty array");
  auto parse_list = [&](const json& list, const std::string& p) {
    std::vector<model::AdapterKind> out;
    if (!list.is_array() || list.empty()) config_error(p, "expected a non-empty array of adapter kinds");
    for (const auto& k : list) {
      if (!k.is_string()) config_error(p, "adapter kinds are strings");
      try {
        out.push_back(model::parse_adapter_kind(k.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        config_error(p, e.what());
      }
    }
    return out;
  };
  if (j.front().is_string()) return {parse_list(j, path)};
  std::vector<std::vector<model::AdapterKind>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_list(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

objective::PenaltyConfig parse_penalty(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  objective::PenaltyConfig p;
  r.opt("enabled", p.enabled);
  r.opt("lambda", p.lambda);
  std::string policy = "half";
  r.opt("pfr_policy", policy);
  r.opt("pfr_constant", p.pfr.constant);
  r.finish();
  try {
    p.pfr.kind = objective::parse_pfr_policy(policy);
  } catch (const std::invalid_argument& e) {
    config_error(path, e.what());
  }
  if (p.lambda < 0.0) config_error(path + ".lambda", "must be nonnegative");
  return p;
}

search::SearchConfig parse_search(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  search::SearchConfig s;
  r.opt("split_ratio", s.split_ratio);
  r.opt("lr_network", s.lr_network);
  r.opt("lr_arch", s.lr_arch);
  r.opt("stage1_epochs", s.stage1_epochs);
  r.opt("stage2_epochs", s.stage2_epochs);
  r.opt("batch_size", s.batch_size);
  r.opt("seed", s.seed);
  if (const json* tau = r.get("tau")) {
    ObjectReader tr(*tau, path + ".tau");
    tr.opt("start", s.tau.start);
    tr.opt("end", s.tau.end);
    std::string decay = search::to_string(s.tau.decay);
    tr.opt("decay", decay);
    tr.finish();
    try {
      s.tau.decay = search::parse_tau_decay(decay);
    } catch (const std::invalid_argument& e) {
      config_error(path + ".tau", e.what());
    }
  }
  r.finish();
  return s;
}

model::PretrainConfig parse_pretrain(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  model::PretrainConfig p;
  r.opt("epochs", p.epochs);
  r.opt("lr", p.lr);
  r.opt("batch_size", p.batch_size);
  r.finish();
  return p;
}

DataConfig parse_data(const json& j, const std::string& path, const std::filesystem::path& base) {
  ObjectReader r(j, path);
  DataConfig d;
  if (const json* syn = r.get("synthetic")) {
    ObjectReader sr(*syn, path + ".synthetic");
    auto& s = d.synthetic;
    sr.opt("target_samples", s.target_samples);
    sr.opt("source_samples", s.source_samples);
    sr.opt("num_tokens", s.num_tokens);
    sr.opt("noise_source", s.noise_source);
    sr.opt("noise_target", s.noise_target);
    sr.opt("shift", s.shift);
    sr.opt("world_seed", s.world_seed);
    sr.finish();
  }
  r.opt("file", d.file);
  r.finish();
  if (!d.file.empty()) {
    std::filesystem::path p(d.file);
    if (p.is_relative() && !base.empty()) p = base / p;
    if (!std::filesystem::exists(p)) config_error(path + ".file", "no such file '" + p.string() + "'");
    d.file = p.string();
  }
  return d;
}

OracleConfig parse_oracle(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  OracleConfig o;
  r.opt("cap", o.cap);
  if (const json* e = r.get("epochs")) o.epochs = e->get<std::size_t>();
  r.finish();
  return o;
}

}  // namespace

void ExperimentConfig::validate() const {
  cascade.validate();
  search.validate();
  if (adapters.empty()) throw std::invalid_argument("config: no adapter candidates");
  if (adapters.size() != 1 && adapters.size() != cascade.module_count()) {
    throw std::invalid_argument("config: adapters lists " + std::to_string(adapters.size()) +
                                " cells, cascade has " + std::to_string(cascade.module_count()));
  }
  for (const auto& list : adapters) {
    if (list.empty()) throw std::invalid_argument("config: empty adapter candidate list");
    if (mode == cell::CellMode::NA && list.size() != 1) {
      throw std::invalid_argument("config: NA mode takes exactly one adapter per cell");
    }
  }
  if (data.file.empty()) {
    if (data.synthetic.target_samples == 0 || data.synthetic.source_samples == 0) {
      throw std::invalid_argument("config: synthetic sample counts must be positive");
    }
  } else if (!std::filesystem::exists(data.file)) {
    throw std::invalid_argument("config: data file '" + data.file + "' does not exist");
  }
  if (pretrain.batch_size == 0) throw std::invalid_argument("config: pretrain.batch_size must be positive");
}

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ObjectReader r(j, "");
  ExperimentConfig cfg;
  if (const json* c = r.get("cascade")) cfg.cascade = parse_cascade(*c, ".cascade");
  if (const json* m = r.get("mode")) {
    try {
      cfg.mode = cell::parse_cell_mode(m->get<std::string>());
    } catch (const std::exception& e) {
      config_error(".mode", e.what());
    }
  }
  if (const json* a = r.get("adapters")) cfg.adapters = parse_adapters(*a, ".adapters");
  if (const json* p = r.get("penalty")) cfg.penalty = parse_penalty(*p, ".penalty");
  if (const json* s = r.get("search")) cfg.search = parse_search(*s, ".search");
  if (const json* p = r.get("pretrain")) cfg.pretrain = parse_pretrain(*p, ".pretrain");
  if (const json* d = r.get("data")) cfg.data = parse_data(*d, ".data", base_dir);
  if (const json* o = r.get("oracle")) cfg.oracle = parse_oracle(*o, ".oracle");
  r.opt("output_dir", cfg.output_dir);
  r.finish();
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json stages = json::array();
  for (const auto& s : cfg.cascade.stages) {
    json modules = json::array();
    for (const auto& m : s.modules) {
      modules.push_back({{"name", m.name},
                         {"dims", m.dims},
                         {"hidden_activation", model::to_string(m.hidden_activation)},
                         {"output_activation", model::to_string(m.output_activation)}});
    }
    stages.push_back({{"name", s.name}, {"modules", modules}});
  }
  json adapters = json::array();
  for (const auto& list : cfg.adapters) {
    json l = json::array();
    for (auto k : list) l.push_back(model::to_string(k));
    adapters.push_back(l);
  }
  const auto& s = cfg.search;
  const auto& syn = cfg.data.synthetic;
  json oracle = {{"cap", cfg.oracle.cap}};
  if (cfg.oracle.epochs) oracle["epochs"] = *cfg.oracle.epochs;
  json data = {{"synthetic",
                {{"target_samples", syn.target_samples},
                 {"source_samples", syn.source_samples},
                 {"num_tokens", syn.num_tokens},
                 {"noise_source", syn.noise_source},
                 {"noise_target", syn.noise_target},
                 {"shift", syn.shift},
                 {"world_seed", syn.world_seed}}}};
  if (!cfg.data.file.empty()) data["file"] = cfg.data.file;
  return {
      {"cascade", {{"labels", cfg.cascade.num_labels}, {"stages", stages}}},
      {"mode", cell::to_string(cfg.mode)},
      {"adapters", adapters},
      {"penalty",
       {{"enabled", cfg.penalty.enabled},
        {"lambda", cfg.penalty.lambda},
        {"pfr_policy", objective::to_string(cfg.penalty.pfr.kind)},
        {"pfr_constant", cfg.penalty.pfr.constant}}},
      {"search",
       {{"split_ratio", s.split_ratio},
        {"lr_network", s.lr_network},
        {"lr_arch", s.lr_arch},
        {"stage1_epochs", s.stage1_epochs},
        {"stage2_epochs", s.stage2_epochs},
        {"batch_size", s.batch_size},
        {"seed", s.seed},
        {"tau", {{"start", s.tau.start}, {"end", s.tau.end}, {"decay", search::to_string(s.tau.decay)}}}}},
      {"pretrain",
       {{"epochs", cfg.pretrain.epochs},
        {"lr", cfg.pretrain.lr},
        {"batch_size", cfg.pretrain.batch_size}}},
      {"data", data},
      {"oracle", oracle},
      {"output_dir", cfg.output_dir},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

std::string config_hash(const ExperimentConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path resolve_output_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) p = std::filesystem::path(root) / p;
  }
  return p;
}

}  // namespace nfa::harness
