#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace coroute {

/// Seedable generator with a portable bit stream. The engine is the standard
/// mt19937_64, whose output sequence is fixed by the C++ standard; the
/// distribution transforms below are written out by hand because the
/// <random> distributions are implementation defined.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/coroute-v1";

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling avoids modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call, no caching so the
  /// stream position depends only on the number of calls).
  double normal();

  /// Derive an independent child stream from (seed, a, b, c).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0);

 private:
  std::mt19937_64 engine_;
};

}  // namespace coroute
