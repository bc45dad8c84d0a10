// Timing comparison of the OpenMP paths against their serial references:
// replicate ensembles (parallel_replicates vs serial_replicates) and oracle
// enumeration (prefix-split vs plain bitmask sweep).

#include <chrono>
#include <cstdio>
#include <vector>

#include "perco/clusters.hpp"
#include "perco/ensemble.hpp"
#include "perco/oracle.hpp"
#include "perco/sampler.hpp"

using namespace perco;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double timed(F&& f) {
  const double t0 = now_seconds();
  f();
  return now_seconds() - t0;
}

void bench_replicates() {
  ModelParams pr;
  pr.d = 1;
  pr.alpha = 0.5;
  pr.beta = 0.6;
  const BoxGeometry box{1, 4096};
  const std::int64_t reps = 200;
  std::vector<std::int64_t> kmax(static_cast<std::size_t>(reps));
  const auto body = [&](std::int64_t rep) {
    const auto cfg = sample_plain(
        pr, box, {42, static_cast<std::uint64_t>(rep)});
    const auto lab = label_clusters(cfg.union_edges(), box.vertex_count);
    std::int64_t best = 0;
    for (std::size_t v = 0; v < lab.parent.size(); ++v)
      if (lab.parent[v] == v && lab.size[v] > best) best = lab.size[v];
    kmax[static_cast<std::size_t>(rep)] = best;
  };

  const double serial = timed([&] { serial_replicates(reps, body); });
  auto serial_result = kmax;
  const double parallel = timed([&] { parallel_replicates(reps, 0, body); });

  bool same = serial_result == kmax;
  std::printf("replicates  side=4096 reps=%lld   serial %.3fs   openmp %.3fs   speedup %.2fx   identical=%s\n",
              static_cast<long long>(reps), serial, parallel,
              serial / parallel, same ? "yes" : "NO");
}

void bench_oracle() {
  ModelParams pr;
  pr.d = 1;
  pr.alpha = 0.5;
  pr.beta = 1.0;
  const BoxGeometry box{1, 6};  // 15 edges
  const auto inst = plain_instance(pr, box);

  const auto eval = [](const SmallDsu& dsu, std::vector<double>& out) {
    out.assign(1, dsu.find(0) == dsu.find(5) ? 1.0 : 0.0);
  };
  double ref_val = 0, par_val = 0;
  const double ref =
      timed([&] { ref_val = expected_stats_reference(inst, eval)[0]; });
  const double par = timed([&] { par_val = expected_stats(inst, eval, 0)[0]; });
  std::printf("oracle      V=6 E=15          dfs+split %.3fs  (p=%.6f)  vs %.3fs  (p=%.6f)  drift=%.2e\n",
              par, par_val, ref, ref_val, par_val - ref_val);
}

}  // namespace

int main() {
  bench_replicates();
  bench_oracle();
  return 0;
}
