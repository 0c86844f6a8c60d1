// Side-by-side throughput of the serial reference collector and the OpenMP
// collector at matching worker counts.
//
//   bench_rollout [steps_per_worker] [workers ...]

#include <cstdio>
#include <cstdlib>
#include <memory>

#include "gridtune/agent.hpp"
#include "gridtune/config.hpp"
#include "gridtune/rollout.hpp"

using namespace gridtune;

int main(int argc, char** argv) {
  long steps_per_worker = 5000;
  if (argc > 1) steps_per_worker = std::atol(argv[1]);
  if (steps_per_worker < 1) {
    std::fprintf(stderr, "steps_per_worker must be >= 1\n");
    return 1;
  }

  std::vector<int> worker_counts;
  for (int i = 2; i < argc; ++i) {
    const int w = std::atoi(argv[i]);
    if (w < 1) {
      std::fprintf(stderr, "bad worker count '%s'\n", argv[i]);
      return 1;
    }
    worker_counts.push_back(w);
  }
  if (worker_counts.empty()) worker_counts = {1, 2, 4};

  const RunConfig cfg = default_run_config(Variant::fixed_gain);
  const auto agent = make_agent(cfg.variant, cfg.plant, cfg.env, 0);
  const auto factory = [&cfg]() -> std::unique_ptr<RolloutEnv> {
    return std::make_unique<InProcessEnv>(cfg.plant, cfg.env);
  };

  std::printf("workers,serial_steps_per_second,parallel_steps_per_second,speedup\n");
  for (const int w : worker_counts) {
    const long n_steps = steps_per_worker * w;

    WorkerPool serial_pool({w, 0}, factory);
    measure_steps_per_second(serial_pool, *agent, n_steps, cfg.ppo.gamma, false);
    const double serial =
        measure_steps_per_second(serial_pool, *agent, n_steps, cfg.ppo.gamma, false);

    WorkerPool parallel_pool({w, 0}, factory);
    measure_steps_per_second(parallel_pool, *agent, n_steps, cfg.ppo.gamma, true);
    const double parallel =
        measure_steps_per_second(parallel_pool, *agent, n_steps, cfg.ppo.gamma, true);

    std::printf("%d,%.1f,%.1f,%.2f\n", w, serial, parallel, parallel / serial);
  }
  return 0;
}
