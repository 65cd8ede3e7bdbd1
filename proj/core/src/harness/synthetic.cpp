#include "nfa/harness/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nfa::harness {

namespace {

struct World {
  std::vector<double> prototypes;  // num_tokens x dim, entries +-1
  std::vector<double> shift;       // dim
  std::vector<std::size_t> relabel;  // token permutation for the target
};

World make_world(const SyntheticParams& p) {
  std::mt19937_64 rng(p.world_seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  World w;
  w.prototypes.resize(p.num_tokens * p.dim);
  for (auto& v : w.prototypes) v = coin(rng) ? 1.0 : -1.0;
  w.shift.resize(p.dim);
  for (auto& s : w.shift) s = (coin(rng) ? 1.0 : -1.0) * p.shift * (1.0 + unit(rng));
  w.relabel.resize(p.num_tokens);
  std::iota(w.relabel.begin(), w.relabel.end(), 0);
  std::shuffle(w.relabel.begin(), w.relabel.end(), rng);
  return w;
}

}  // namespace

std::vector<double> target_shift(const SyntheticParams& params) {
  return make_world(params).shift;
}

data::Dataset generate_synthetic(const SyntheticParams& p, std::uint64_t seed) {
  if (p.n_samples == 0) throw std::invalid_argument("generate_synthetic: n_samples must be positive");
  if (p.dim == 0 || p.num_tokens == 0 || p.num_labels < 2) {
    throw std::invalid_argument("generate_synthetic: dim and num_tokens must be positive, num_labels >= 2");
  }
  if (p.num_labels > p.num_tokens) {
    throw std::invalid_argument("generate_synthetic: num_labels (" + std::to_string(p.num_labels) +
                                ") exceeds num_tokens (" + std::to_string(p.num_tokens) + ")");
  }
  if (p.noise_source < 0.0 || p.noise_target < 0.0 || p.shift < 0.0) {
    throw std::invalid_argument("generate_synthetic: noise levels and shift must be nonnegative");
  }
  const World w = make_world(p);
  const bool target = p.domain == Domain::Target;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> token_dist(0, p.num_tokens - 1);
  std::normal_distribution<double> noise(0.0, target ? p.noise_target : p.noise_source);

  data::Dataset d;
  d.input_dim = p.dim;
  d.num_labels = p.num_labels;
  d.num_tokens = p.num_tokens;
  d.samples.reserve(p.n_samples);
  for (std::size_t i = 0; i < p.n_samples; ++i) {
    data::Sample s;
    s.id = i;
    const std::size_t t = token_dist(rng);
    s.token = static_cast<int>(t);
    s.clean.assign(w.prototypes.begin() + static_cast<std::ptrdiff_t>(t * p.dim),
                   w.prototypes.begin() + static_cast<std::ptrdiff_t>((t + 1) * p.dim));
    s.input.resize(p.dim);
    for (std::size_t k = 0; k < p.dim; ++k) {
      s.input[k] = s.clean[k] + noise(rng) + (target ? w.shift[k] : 0.0);
    }
    s.label = static_cast<int>((target ? w.relabel[t] : t) % p.num_labels);
    d.samples.push_back(std::move(s));
  }
  return d;
}

data::Dataset load_dataset_csv(const std::filesystem::path& path, std::size_t dim,
                               std::size_t num_labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  data::Dataset d;
  d.input_dim = dim;
  d.num_labels = num_labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    try {
      data::Sample s;
      s.id = d.samples.size();
      s.label = std::stoi(fields.at(0));
      for (std::size_t k = 1; k < fields.size(); ++k) s.input.push_back(std::stod(fields[k]));
      d.samples.push_back(std::move(s));
    } catch (const std::invalid_argument&) {
      if (line_no == 1) continue;  // header
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed row");
    } catch (const std::out_of_range&) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": value out of range");
    }
  }
  if (d.empty()) throw std::invalid_argument("dataset '" + path.string() + "' has no rows");
  d.validate();
  return d;
}

void save_dataset_csv(const data::Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset '" + path.string() + "'");
  out << "label";
  for (std::size_t k = 0; k < data.input_dim; ++k) out << ",x" << k;
  out << '\n';
  char buf[32];
  for (const auto& s : data.samples) {
    out << s.label;
    for (double v : s.input) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace nfa::harness
