#include "agtcnsd/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace agtcnsd {

namespace {

constexpr char kMagic[8] = {'A', 'G', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(T));
}

void write_block(std::ostream& out, const std::string& text) {
  write_pod<std::uint64_t>(out, text.size());
  write_bytes(out, text.data(), text.size());
}

[[noreturn]] void corrupt(const std::string& why) {
  throw std::runtime_error("checkpoint: corrupt file (" + why + ")");
}

void read_bytes(std::istream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) corrupt(std::string("truncated ") + what);
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T value{};
  read_bytes(in, &value, sizeof(T), what);
  return value;
}

std::string read_block(std::istream& in, const char* what) {
  const std::uint64_t n = read_pod<std::uint64_t>(in, what);
  if (n > (1ull << 32)) corrupt(std::string("oversized ") + what);
  std::string text(n, '\0');
  read_bytes(in, text.data(), n, what);
  return text;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");

  write_bytes(out, kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);

  nlohmann::ordered_json meta;
  meta["model"] = nlohmann::ordered_json::parse(checkpoint.config.to_json());
  meta["features"] = checkpoint.feature_names;
  meta["target"] = checkpoint.target_name;
  write_block(out, meta.dump());
  write_block(out, checkpoint.stats.to_json());

  const auto named = named_parameters(checkpoint.params);
  write_pod<std::uint64_t>(out, named.size());
  for (const auto& [name, tensor] : named) {
    write_block(out, name);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) write_pod<std::uint64_t>(out, d);
    write_bytes(out, tensor.values().data(), tensor.size() * sizeof(double));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read '" + path + "'");

  char magic[8];
  read_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) corrupt("bad magic bytes");
  const std::uint32_t version = read_pod<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version) + ", expected " +
                             std::to_string(kVersion));
  }

  Checkpoint checkpoint;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_block(in, "config block"));
  } catch (const nlohmann::json::parse_error&) {
    corrupt("unparseable config block");
  }
  checkpoint.config = ModelConfig::from_json(meta.at("model").dump());
  checkpoint.feature_names = meta.at("features").get<std::vector<std::string>>();
  checkpoint.target_name = meta.at("target").get<std::string>();
  checkpoint.stats = NormalizationStats::from_json(read_block(in, "stats block"));

  std::mt19937_64 rng(checkpoint.config.seed);
  checkpoint.params = init_model_params(checkpoint.config, checkpoint.feature_names.size(), rng);
  auto named = named_parameters(checkpoint.params);

  const std::uint64_t count = read_pod<std::uint64_t>(in, "array count");
  if (count != named.size()) corrupt("array count does not match the configured architecture");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_block(in, "array name");
    if (name != named[i].first) corrupt("unexpected array '" + name + "'");
    const std::uint32_t rank = read_pod<std::uint32_t>(in, "array rank");
    if (rank != named[i].second.rank()) corrupt("rank mismatch for '" + name + "'");
    Shape shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = read_pod<std::uint64_t>(in, "array shape");
    if (shape != named[i].second.shape()) corrupt("shape mismatch for '" + name + "'");
    read_bytes(in, named[i].second.mutable_values().data(), named[i].second.size() * sizeof(double), "array data");
  }
  return checkpoint;
}

}  // namespace agtcnsd
