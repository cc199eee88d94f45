// Serial reference vs OpenMP kernels: dense products at encoder sizes and a
// full sample-N rollout pool. Prints one row per case with the speedup and
// whether both variants produced identical bits.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "coroute/kernels.hpp"
#include "coroute/rng.hpp"
#include "coroute/rollout.hpp"

using namespace coroute;

namespace {

template <class F>
double best_ms(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

std::vector<Real> random_matrix(std::size_t n, Rng& rng) {
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-1, 1));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel benchmark"};
  int reps = 5;
  int threads = 0;
  int samples = 64;
  int aerial = 15, ground = 5;
  app.add_option("--reps", reps, "Repetitions per case (best time is reported)");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
  app.add_option("--samples", samples, "Pool size for the rollout case");
  app.add_option("--aerial", aerial, "Aerial points in the rollout instance");
  app.add_option("--ground", ground, "Ground points in the rollout instance");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) kernels::set_thread_limit(threads);

  std::printf("threads %d\n", kernels::thread_limit());
  std::printf("%-28s %12s %12s %8s %s\n", "case", "serial_ms", "parallel_ms", "speedup", "identical");
  Rng rng(1);
  struct Shape {
    int n, k, m;
  };
  for (const Shape s : {Shape{21, 128, 128}, Shape{21, 128, 512}, Shape{128, 128, 128}, Shape{256, 512, 512},
                        Shape{1024, 256, 256}}) {
    const auto a = random_matrix(static_cast<std::size_t>(s.n) * s.k, rng);
    const auto b = random_matrix(static_cast<std::size_t>(s.k) * s.m, rng);
    std::vector<Real> c1(static_cast<std::size_t>(s.n) * s.m), c2(c1.size());
    const double ts = best_ms(reps, [&] { kernels::matmul_serial(a.data(), b.data(), c1.data(), s.n, s.k, s.m); });
    const double tp = best_ms(reps, [&] { kernels::matmul_parallel(a.data(), b.data(), c2.data(), s.n, s.k, s.m); });
    const bool same = std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(Real)) == 0;
    char name[64];
    std::snprintf(name, sizeof name, "matmul %dx%dx%d", s.n, s.k, s.m);
    std::printf("%-28s %12.3f %12.3f %8.2f %s\n", name, ts, tp, ts / tp, same ? "yes" : "NO");
  }

  const Scenario scenario = generate_scenario(aerial, ground, Distribution::uniform, TeamConfig{}, 3);
  const PolicyParams params = init_policy(PolicyConfig::desk(), 2);
  const DecodePolicy pool = DecodePolicy::sample(samples, 9);
  RolloutResult serial, parallel;
  const int saved = kernels::thread_limit();
  kernels::set_thread_limit(1);
  const double ts = best_ms(reps, [&] { serial = rollout(scenario, TeamConfig{}, params, pool); });
  kernels::set_thread_limit(saved);
  const double tp = best_ms(reps, [&] { parallel = rollout(scenario, TeamConfig{}, params, pool); });
  char name[64];
  std::snprintf(name, sizeof name, "rollout sample%d U%dG%d", samples, aerial, ground);
  std::printf("%-28s %12.3f %12.3f %8.2f %s\n", name, ts, tp, ts / tp,
              serial.pool == parallel.pool ? "yes" : "NO");
  return 0;
}
