// Times the OpenMP motif kernels against the serial reference paths and a
// training epoch against its single-thread run.

#include <chrono>
#include <cstdio>

#include "dgib/model.hpp"
#include "dgib/motifs.hpp"
#include "dgib/rng.hpp"
#include "dgib/selfcheck.hpp"
#include "dgib/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace dgib;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DirectedGraph random_digraph(int n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<int, int>> arcs;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < p) arcs.emplace_back(i, j);
  return make_digraph(n, arcs);
}

void bench_census() {
  std::printf("motif census (ordered-instance totals)\n");
  std::printf("%8s %8s %12s %12s %12s %8s\n", "n", "arcs", "oracle[s]", "serial[s]", "openmp[s]",
              "match");
  for (int n : {40, 80, 160, 320}) {
    auto g = random_digraph(n, 0.08, static_cast<std::uint64_t>(n));

    double t_oracle = -1.0;
    std::array<std::uint64_t, kMotifCount> oracle_counts{};
    if (n <= 160) {
      auto t0 = std::chrono::steady_clock::now();
      for (int m = 1; m <= kMotifCount; ++m) {
        oracle_counts[static_cast<std::size_t>(m - 1)] =
            static_cast<std::uint64_t>(match_instances_oracle(g, m).size());
      }
      t_oracle = seconds_since(t0);
    }

    auto t1 = std::chrono::steady_clock::now();
    auto serial = census_counts_serial(g);
    double t_serial = seconds_since(t1);

    auto t2 = std::chrono::steady_clock::now();
    auto parallel = census_counts(g);
    double t_parallel = seconds_since(t2);

    bool match = serial == parallel && (t_oracle < 0.0 || serial == oracle_counts);
    std::printf("%8d %8zu %12.4f %12.4f %12.4f %8s\n", n, g.arcs.size(),
                t_oracle, t_serial, t_parallel, match ? "yes" : "NO");
  }
}

void bench_training() {
  std::printf("\ntraining epoch, batch-parallel vs single-thread\n");
  PlantSpec spec;
  spec.entities = 4000;
  spec.genes = 40;
  spec.pairs = 120;
  spec.seed = 9;
  auto data = generate(spec);

  TripleSet kg;
  for (const auto& [h, r, t] : data.kg_triples) {
    kg.triples.push_back({kg.entities.intern(h), kg.relations.intern(r), kg.entities.intern(t)});
  }
  kg.kg_entity_count = kg.entities.size();
  std::vector<LabeledPair> pairs;
  for (const auto& [pr, label] : data.pairs) {
    pairs.push_back({kg.entities.intern(pr[0]), kg.entities.intern(pr[1]), label});
  }
  RunConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 3;
  std::vector<LabeledPair> positives;
  for (const auto& p : pairs) {
    if (p.label == 1) positives.push_back(p);
  }
  auto g = build_joint_graph(kg, positives, cfg.d0, cfg.d1, cfg.seed);

#ifdef _OPENMP
  int max_threads = omp_get_max_threads();
#else
  int max_threads = 1;
#endif
  auto run = [&](int threads) {
    cfg.threads = threads;
    auto t0 = std::chrono::steady_clock::now();
    auto out = train_model(g, pairs, {}, cfg);
    double dt = seconds_since(t0);
    return std::make_pair(dt, out.log.back().mean.total);
  };
  auto [t_one, loss_one] = run(1);
  auto [t_many, loss_many] = run(max_threads);
  std::printf("%8s %12s %14s\n", "threads", "epoch[s]", "final loss");
  std::printf("%8d %12.3f %14.8f\n", 1, t_one, loss_one);
  std::printf("%8d %12.3f %14.8f\n", max_threads, t_many, loss_many);
  std::printf("identical losses across thread counts: %s\n",
              loss_one == loss_many ? "yes" : "NO");
}

}  // namespace

int main() {
  bench_census();
  bench_training();
  return 0;
}
