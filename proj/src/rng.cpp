#include "coroute/rng.hpp"

#include <cmath>
#include <numbers>

#include "coroute/error.hpp"

namespace coroute {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_speed: return "invalid-speed";
    case ErrorKind::disconnected_network: return "disconnected-network";
    case ErrorKind::generation_failure: return "generation-failure";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::contract_violation: return "contract-violation";
    case ErrorKind::size_limit: return "size-limit";
    case ErrorKind::version_mismatch: return "version-mismatch";
    case ErrorKind::io: return "io";
    case ErrorKind::non_finite: return "non-finite";
  }
  return "unknown";
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer applied to a running combination.
  auto finalize = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = finalize(seed);
  h = finalize(h ^ a);
  h = finalize(h ^ b);
  h = finalize(h ^ c);
  return h;
}

}  // namespace coroute
