#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "coroute/policy.hpp"

namespace coroute {

/// Versioned container of named tensors. Layout:
///   8-byte magic "CRTCKPT\0", u32 format version, u64 header length,
///   JSON header {config, rng, meta, tensors:[{name, shape, offset}]},
///   then every tensor's values as raw little-endian IEEE-754 binary64.
struct Checkpoint {
  static constexpr int kVersion = 1;

  PolicyConfig config;
  std::string rng_algorithm;
  std::map<std::string, std::string> meta;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  void add(const std::string& prefix, const std::vector<std::string>& tensor_names, const std::vector<Tensor>& values);
  /// Tensors stored under `prefix`, in the order of `tensor_names`.
  std::vector<Tensor> extract(const std::string& prefix, const std::vector<std::string>& tensor_names) const;
  bool has(const std::string& name) const;

  bool operator==(const Checkpoint&) const = default;
};

/// Policy weights stored under "policy/".
Checkpoint make_checkpoint(const PolicyParams& params);
PolicyParams policy_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix = "policy/");

std::string checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(std::string_view bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace coroute
