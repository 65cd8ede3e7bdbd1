#include "nfa/harness/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nfa::harness {

using nlohmann::json;

json decision_to_json(const ArchitectureDecision& d) {
  json cells = json::array();
  for (const auto& c : d.cells) {
    cells.push_back({{"index", c.index},
                     {"module", c.module},
                     {"choice", c.choice},
                     {"alpha", c.alpha},
                     {"P", c.path_params}});
  }
  return {{"mode", d.mode},
          {"cells", cells},
          {"totals",
           {{"total_params", d.totals.total_params},
            {"train_params", d.totals.train_params},
            {"selected_params", d.totals.selected_params}}},
          {"config_hash", d.config_hash},
          {"seed", d.seed}};
}

ArchitectureDecision decision_from_json(const json& j) {
  try {
    ArchitectureDecision d;
    d.mode = j.at("mode").get<std::string>();
    d.config_hash = j.at("config_hash").get<std::string>();
    d.seed = j.at("seed").get<std::uint64_t>();
    const auto& t = j.at("totals");
    d.totals.total_params = t.at("total_params").get<std::size_t>();
    d.totals.train_params = t.at("train_params").get<std::size_t>();
    d.totals.selected_params = t.at("selected_params").get<std::size_t>();
    for (const auto& c : j.at("cells")) {
      CellDecision cd;
      cd.index = c.at("index").get<std::size_t>();
      cd.module = c.at("module").get<std::string>();
      cd.choice = c.at("choice").get<std::string>();
      cd.alpha = c.at("alpha").get<std::vector<double>>();
      cd.path_params = c.at("P").get<std::map<std::string, std::size_t>>();
      d.cells.push_back(std::move(cd));
    }
    return d;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("architecture document: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void export_architecture(const ArchitectureDecision& d, const std::filesystem::path& path) {
  write_text(path, decision_to_json(d).dump(2) + "\n");
}

ArchitectureDecision import_architecture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open architecture '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("architecture '" + path.string() + "': " + e.what());
  }
  return decision_from_json(j);
}

std::string metrics_csv(const std::vector<search::EpochRecord>& history) {
  std::string out = "epoch,stage,train_loss,val_loss,penalty,selected_params\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%zu\n", r.epoch,
                  search::to_string(r.stage), r.train_loss, r.val_loss, r.penalty,
                  r.selected_params);
    out += buf;
  }
  return out;
}

std::vector<CellDiff> compare_decisions(const ArchitectureDecision& a,
                                        const ArchitectureDecision& b) {
  if (a.cells.size() != b.cells.size()) {
    throw std::invalid_argument("compare: decisions have " + std::to_string(a.cells.size()) +
                                " and " + std::to_string(b.cells.size()) + " cells");
  }
  std::vector<CellDiff> out;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    out.push_back({a.cells[i].index, a.cells[i].module, a.cells[i].choice, b.cells[i].choice});
  }
  return out;
}

std::string format_comparison(const ArchitectureDecision& a, const ArchitectureDecision& b) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-5s %-12s %-14s %-14s\n", "cell", "module", "A", "B");
  os << buf;
  std::size_t changed = 0;
  for (const auto& d : compare_decisions(a, b)) {
    std::snprintf(buf, sizeof buf, "%-5zu %-12s %-14s %-14s%s\n", d.index, d.module.c_str(),
                  d.choice_a.c_str(), d.choice_b.c_str(), d.differs() ? "  *" : "");
    os << buf;
    changed += d.differs() ? 1 : 0;
  }
  std::snprintf(buf, sizeof buf, "selected params: %zu vs %zu; %zu cell(s) differ\n",
                a.totals.selected_params, b.totals.selected_params, changed);
  os << buf;
  return os.str();
}

}  // namespace nfa::harness
