#include <cmath>

#include "dgib/krange.hpp"
#include "dgib/rng.hpp"
#include "doctest.h"

using namespace dgib;

namespace {

// Straightforward dense-matrix power iteration, kept independent of the
// adjacency-list kernel it checks.
Eigen::VectorXd pagerank_oracle(const DirectedGraph& g, double d, int iters) {
  int n = g.n;
  Mat p = Mat::Zero(n, n);  // column-stochastic transition
  std::vector<int> outdeg(static_cast<std::size_t>(n), 0);
  for (const auto& [i, j] : g.arcs) ++outdeg[static_cast<std::size_t>(i)];
  for (const auto& [i, j] : g.arcs) p(j, i) = 1.0 / outdeg[static_cast<std::size_t>(i)];
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < iters; ++it) {
    double dangling = 0.0;
    for (int i = 0; i < n; ++i)
      if (outdeg[static_cast<std::size_t>(i)] == 0) dangling += v[i];
    v = d * (p * v) +
        Eigen::VectorXd::Constant(n, (1.0 - d) / n + d * dangling / n);
  }
  return v;
}

}  // namespace

TEST_SUITE("krange") {
  TEST_CASE("two-node cycle splits mass evenly") {
    auto g = make_digraph(2, {{0, 1}, {1, 0}});
    auto p = pagerank(g);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("complete digraph is uniform") {
    std::vector<std::pair<int, int>> arcs;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        if (i != j) arcs.emplace_back(i, j);
    auto p = pagerank(make_digraph(5, arcs));
    for (int i = 0; i < 5; ++i) CHECK(p[i] == doctest::Approx(0.2).epsilon(1e-9));
  }

  TEST_CASE("three-node chain matches the oracle iteration") {
    auto g = make_digraph(3, {{0, 1}, {1, 2}});
    auto p = pagerank(g);
    auto oracle = pagerank_oracle(g, 0.85, 300);
    for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(oracle[i]).epsilon(1e-7));
  }

  TEST_CASE("scores sum to one and stay nonnegative") {
    Rng rng(91);
    std::vector<std::pair<int, int>> arcs;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        if (i != j && rng.uniform() < 0.15) arcs.emplace_back(i, j);
    auto p = pagerank(make_digraph(20, arcs));
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK((p.array() >= 0).all());
  }

  TEST_CASE("non-convergence reports the residual") {
    auto g = make_digraph(3, {{0, 1}, {1, 2}});  // asymmetric, not stationary in 1 sweep
    try {
      pagerank(g, 0.85, 1e-300, 1);
      FAIL("expected non-convergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::numeric);
      CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
  }

  TEST_CASE("percentile uses linear interpolation") {
    CHECK(percentile({1, 2, 3, 4}, 50.0) == doctest::Approx(2.5));
    CHECK(percentile({1, 2, 3, 4}, 90.0) == doctest::Approx(3.7));
    CHECK(percentile({5}, 90.0) == 5.0);
  }

  TEST_CASE("single-node enclosing graph estimates one component") {
    EnclosingGraph eg;
    eg.u = 0;
    eg.v = 1;
    eg.nodes = {0};
    auto est = estimate_core_count(eg);
    CHECK(est.component_count == 1);
  }

  TEST_CASE("uniform connected graph keeps everything and counts one") {
    EnclosingGraph eg;
    eg.u = 0;
    eg.v = 1;
    eg.nodes = {0, 1, 2};
    eg.edges = {{0, 0, 1}, {1, 0, 2}, {2, 0, 0}};  // directed 3-cycle, symmetric scores
    auto est = estimate_core_count(eg);
    CHECK(est.retained.size() == 3);  // exact ties at the threshold are retained
    CHECK(est.component_count == 1);
  }

  TEST_CASE("two dense cliques bridged by pruned low-rank nodes count two") {
    // Nodes 0..2 and 3..5 are mutual triangles; 6..11 are low-score leaves
    // hanging off the bridge node 6 connecting the cliques.
    std::vector<EnclosingGraph::Edge> edges;
    auto both = [&edges](int a, int b) {
      edges.push_back({a, 0, b});
      edges.push_back({b, 0, a});
    };
    both(0, 1);
    both(1, 2);
    both(0, 2);
    both(3, 4);
    both(4, 5);
    both(3, 5);
    edges.push_back({6, 0, 0});  // bridge feeds both cliques but earns no rank
    edges.push_back({6, 0, 3});
    for (int leaf = 7; leaf < 12; ++leaf) edges.push_back({leaf, 0, 6});
    EnclosingGraph eg;
    eg.u = 0;
    eg.v = 3;
    eg.nodes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    eg.edges = edges;
    auto est = estimate_core_count(eg);
    CHECK(est.component_count == 2);
  }

  TEST_CASE("estimate is invariant under node relabeling") {
    EnclosingGraph eg;
    eg.u = 0;
    eg.v = 1;
    eg.nodes = {0, 1, 2, 3, 4};
    eg.edges = {{0, 0, 2}, {2, 0, 3}, {3, 0, 2}, {1, 0, 4}, {4, 0, 4}};
    auto est = estimate_core_count(eg);

    std::vector<int> perm = {3, 1, 0, 4, 2};
    EnclosingGraph relabeled;
    relabeled.u = eg.u;
    relabeled.v = eg.v;
    relabeled.nodes = {0, 1, 2, 3, 4};
    for (const auto& e : eg.edges) {
      relabeled.edges.push_back({perm[static_cast<std::size_t>(e.head)], e.relation,
                                 perm[static_cast<std::size_t>(e.tail)]});
    }
    auto est2 = estimate_core_count(relabeled);
    CHECK(est.component_count == est2.component_count);
    CHECK(est.retained.size() == est2.retained.size());
  }

  TEST_CASE("histogram reports counts and the K range") {
    auto s = krange_histogram({1, 1, 2, 3, 1});
    CHECK(s.histogram.at(1) == 3);
    CHECK(s.histogram.at(2) == 1);
    CHECK(s.k_min == 1);
    CHECK(s.k_max == 3);

    auto single = krange_histogram({1});
    CHECK(single.k_min == 1);
    CHECK(single.k_max == 1);
    CHECK_THROWS_AS(krange_histogram({}), Error);
  }
}
