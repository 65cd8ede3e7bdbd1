#include "nfa/harness/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace nfa::harness {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {
std::filesystem::path with_suffix(const std::filesystem::path& base, const char* ext) {
  return base.string() + ext;
}
constexpr const char* kFormat = "nfa-checkpoint-v1";
}  // namespace

Checkpoint snapshot(const diff::ParameterSet& params) {
  Checkpoint c;
  for (const auto& [name, t] : params) {
    auto v = t.value();
    c[name] = {t.shape(), {v.begin(), v.end()}};
  }
  return c;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& base) {
  nlohmann::json tensors = nlohmann::json::array();
  std::ofstream bin(with_suffix(base, ".bin"), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write checkpoint '" + base.string() + ".bin'");
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt) {
    bin.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    tensors.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
    offset += t.values.size();
  }
  bin.close();
  if (!bin) throw std::runtime_error("write failed for '" + base.string() + ".bin'");
  std::ofstream manifest(with_suffix(base, ".json"));
  if (!manifest) throw std::runtime_error("cannot write checkpoint '" + base.string() + ".json'");
  nlohmann::json m = {{"format", kFormat}, {"dtype", "float64"}, {"tensors", tensors}};
  manifest << m.dump(2) << '\n';
  if (!manifest) throw std::runtime_error("write failed for '" + base.string() + ".json'");
}

Checkpoint read_checkpoint(const std::filesystem::path& base) {
  std::ifstream manifest(with_suffix(base, ".json"));
  if (!manifest) throw std::runtime_error("cannot open checkpoint '" + base.string() + ".json'");
  nlohmann::json m;
  manifest >> m;
  if (m.value("format", "") != kFormat) {
    throw std::invalid_argument("checkpoint '" + base.string() + "': unknown format");
  }
  std::ifstream bin(with_suffix(base, ".bin"), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open checkpoint '" + base.string() + ".bin'");
  std::vector<double> blob;
  bin.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  bin.seekg(0);
  blob.resize(bytes / sizeof(double));
  bin.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(double)));
  Checkpoint c;
  for (const auto& t : m.at("tensors")) {
    const auto offset = t.at("offset").get<std::size_t>();
    const auto count = t.at("count").get<std::size_t>();
    if (offset + count > blob.size()) {
      throw std::invalid_argument("checkpoint '" + base.string() + "': tensor past end of data");
    }
    StoredTensor st;
    st.shape = t.at("shape").get<diff::Shape>();
    st.values.assign(blob.begin() + static_cast<std::ptrdiff_t>(offset),
                     blob.begin() + static_cast<std::ptrdiff_t>(offset + count));
    c[t.at("name").get<std::string>()] = std::move(st);
  }
  return c;
}

void restore(const Checkpoint& ckpt, diff::ParameterSet& params) {
  for (const auto& [name, t] : params) {
    auto it = ckpt.find(name);
    if (it == ckpt.end()) throw std::invalid_argument("restore: checkpoint lacks '" + name + "'");
    if (it->second.shape != t.shape()) {
      throw std::invalid_argument("restore: shape mismatch for '" + name + "'");
    }
    diff::Tensor dst = t;
    auto v = dst.mutable_value();
    std::copy(it->second.values.begin(), it->second.values.end(), v.begin());
  }
}

}  // namespace nfa::harness
