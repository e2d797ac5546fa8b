#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ascetic/reference.hpp"
#include "ascetic/simctl.hpp"

using namespace ascetic;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    double t0 = now_ms();
    f();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

}  // namespace

int main() {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("delay/objective kernels: naive serial reference vs optimized (%d thread%s)\n",
              threads, threads == 1 ? "" : "s");
  std::printf("%-10s %8s %8s %12s %12s %9s %12s\n", "case", "nodes", "reqs", "reference_ms",
              "optimized_ms", "speedup", "max_abs_diff");

  struct Case {
    int nodes, requests;
  };
  for (Case c : {Case{20, 50}, Case{40, 100}, Case{80, 200}}) {
    ExperimentConfig cfg;
    cfg.n_nodes = c.nodes;
    cfg.n_requests = c.requests;
    cfg.horizon = 5;
    cfg.orch = OrchKind::Random;
    Rng master(7);
    Topology topo = build_topology(cfg.n_nodes, cfg.tiers, master.sub(11).next_u64(), cfg.topo);
    Scenario scn =
        generate_scenario(topo, cfg.scenario, cfg.n_requests, cfg.horizon, master.sub(22).next_u64());
    ResidualState res = ResidualState::make(topo, scn);
    Rng rng = master.sub(33);
    Allocation alloc = Allocation::empty(scn);
    for (Slot t = 1; t <= scn.horizon; ++t)
      alloc.at(t) = random_place(topo, scn, t, res, rng, cfg.orchestrator);

    // objective
    double ref_obj = 0, opt_obj = 0;
    double tr = time_best_of(5, [&] { ref_obj = reference::objective_cost(alloc, scn, topo); });
    double to = time_best_of(5, [&] { opt_obj = objective_cost(alloc, scn, topo); });
    std::printf("%-10s %8d %8d %12.3f %12.3f %8.2fx %12.3g\n", "objective", c.nodes, c.requests,
                tr, to, tr / to, std::fabs(ref_obj - opt_obj));

    // per-slot end-to-end delays
    std::vector<double> ref_d, opt_d;
    tr = time_best_of(3, [&] {
      ref_d.clear();
      for (Slot t = 1; t <= scn.horizon; ++t)
        for (RequestId r = 0; r < scn.n_requests(); ++r) {
          // the kernel throws on unsupported requests; keep NaN slots so the
          // vector stays aligned with slot_delays
          bool live = scn.requests[r].arrival <= t && alloc.at(t).supported(r);
          ref_d.push_back(live ? reference::e2e_delay(alloc, scn, topo, r, t)
                               : std::numeric_limits<double>::quiet_NaN());
        }
    });
    to = time_best_of(3, [&] {
      opt_d.clear();
      for (Slot t = 1; t <= scn.horizon; ++t) {
        std::vector<double> d = slot_delays(alloc.at(t), scn, topo, t);
        opt_d.insert(opt_d.end(), d.begin(), d.end());
      }
    });
    double dmax = 0;
    for (std::size_t i = 0; i < ref_d.size(); ++i) {
      if (std::isnan(ref_d[i]) && std::isnan(opt_d[i])) continue;
      dmax = std::max(dmax, std::fabs(ref_d[i] - opt_d[i]));
    }
    std::printf("%-10s %8d %8d %12.3f %12.3f %8.2fx %12.3g\n", "delays", c.nodes, c.requests, tr,
                to, tr / to, dmax);
  }
  return 0;
}
