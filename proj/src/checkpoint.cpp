#include "coroute/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coroute/error.hpp"
#include "coroute/rng.hpp"
#include "json.hpp"

namespace coroute {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'R', 'T', 'C', 'K', 'P', 'T', '\0'};

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

json config_to_json(const PolicyConfig& c) {
  return {{"d_h", c.d_h},
          {"heads", c.heads},
          {"layers", c.layers},
          {"d_ff", c.d_ff},
          {"clip", static_cast<double>(c.clip)},
          {"time_norm_s", static_cast<double>(c.time_norm_s)},
          {"leaky_slope", static_cast<double>(c.leaky_slope)},
          {"norm_eps", static_cast<double>(c.norm_eps)}};
}

PolicyConfig config_from_json(const json& j) {
  PolicyConfig c;
  c.d_h = j.at("d_h").get<int>();
  c.heads = j.at("heads").get<int>();
  c.layers = j.at("layers").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.clip = static_cast<Real>(j.at("clip").get<double>());
  c.time_norm_s = static_cast<Real>(j.at("time_norm_s").get<double>());
  c.leaky_slope = static_cast<Real>(j.at("leaky_slope").get<double>());
  c.norm_eps = static_cast<Real>(j.at("norm_eps").get<double>());
  c.validate();
  return c;
}

}  // namespace

void Checkpoint::add(const std::string& prefix, const std::vector<std::string>& tensor_names,
                     const std::vector<Tensor>& values) {
  require(tensor_names.size() == values.size(), ErrorKind::contract_violation, "name/tensor count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(!has(prefix + tensor_names[i]), ErrorKind::invalid_argument, "duplicate tensor " + prefix + tensor_names[i]);
    names.push_back(prefix + tensor_names[i]);
    tensors.push_back(values[i]);
  }
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& n : names) {
    if (n == name) return true;
  }
  return false;
}

std::vector<Tensor> Checkpoint::extract(const std::string& prefix, const std::vector<std::string>& tensor_names) const {
  std::vector<Tensor> out;
  for (const auto& want : tensor_names) {
    const std::string full = prefix + want;
    std::size_t i = 0;
    while (i < names.size() && names[i] != full) ++i;
    require(i < names.size(), ErrorKind::invalid_argument, "checkpoint has no tensor " + full);
    out.push_back(tensors[i]);
  }
  return out;
}

Checkpoint make_checkpoint(const PolicyParams& params) {
  Checkpoint c;
  c.config = params.config;
  c.rng_algorithm = std::string(Rng::kAlgorithm);
  c.add("policy/", params.names, params.tensors);
  return c;
}

PolicyParams policy_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix) {
  PolicyParams p;
  p.config = ckpt.config;
  p.names = parameter_names(ckpt.config);
  p.tensors = ckpt.extract(prefix, p.names);
  const PolicyParams shapes = init_policy(ckpt.config, 0);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    require(p.tensors[i].shape == shapes.tensors[i].shape, ErrorKind::invalid_argument,
            "tensor " + prefix + p.names[i] + " has shape " + shape_string(p.tensors[i].shape) + ", expected " +
                shape_string(shapes.tensors[i].shape));
  }
  return p;
}

std::string checkpoint_to_bytes(const Checkpoint& ckpt) {
  json header;
  header["config"] = config_to_json(ckpt.config);
  header["rng"] = ckpt.rng_algorithm;
  header["meta"] = ckpt.meta;
  json table = json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
    table.push_back({{"name", ckpt.names[i]}, {"shape", ckpt.tensors[i].shape}, {"offset", offset}});
    offset += ckpt.tensors[i].size();
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le(out, Checkpoint::kVersion, 4);
  put_le(out, text.size(), 8);
  out += text;
  out.reserve(out.size() + 8 * offset);
  for (const auto& t : ckpt.tensors) {
    for (Real v : t.values) put_le(out, std::bit_cast<std::uint64_t>(static_cast<double>(v)), 8);
  }
  return out;
}

Checkpoint checkpoint_from_bytes(std::string_view bytes) {
  require(bytes.size() >= 20 && std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0, ErrorKind::io,
          "not a checkpoint file");
  const auto version = static_cast<int>(get_le(bytes, 8, 4));
  require(version == Checkpoint::kVersion, ErrorKind::version_mismatch,
          "checkpoint format version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(Checkpoint::kVersion) + ")");
  const std::size_t len = get_le(bytes, 12, 8);
  require(20 + len <= bytes.size(), ErrorKind::io, "truncated checkpoint header");
  Checkpoint c;
  try {
    const json header = json::parse(bytes.substr(20, len));
    c.config = config_from_json(header.at("config"));
    c.rng_algorithm = header.at("rng").get<std::string>();
    c.meta = header.at("meta").get<std::map<std::string, std::string>>();
    const std::size_t base = 20 + len;
    for (const auto& entry : header.at("tensors")) {
      const auto shape = entry.at("shape").get<std::vector<int>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      std::size_t count = 1;
      for (int d : shape) count *= static_cast<std::size_t>(d);
      require(base + 8 * (offset + count) <= bytes.size(), ErrorKind::io, "truncated checkpoint data");
      std::vector<Real> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        values[i] = static_cast<Real>(std::bit_cast<double>(get_le(bytes, base + 8 * (offset + i), 8)));
      }
      c.names.push_back(entry.at("name").get<std::string>());
      c.tensors.emplace_back(shape, std::move(values));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string("malformed checkpoint header: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  const std::string bytes = checkpoint_to_bytes(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::io, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_bytes(ss.str());
}

}  // namespace coroute
