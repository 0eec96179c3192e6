#include "dgib/krange.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "dgib/io.hpp"

namespace dgib {

Eigen::VectorXd pagerank(const DirectedGraph& g, double damping, double tol, int max_iter) {
  if (g.n < 1) fail(ErrorCode::domain, "pagerank needs a nonempty node set");
  auto n = static_cast<Eigen::Index>(g.n);
  std::vector<std::vector<int>> out_adj(static_cast<std::size_t>(g.n));
  for (const auto& [i, j] : g.arcs) out_adj[static_cast<std::size_t>(i)].push_back(j);

  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(g.n));
  Eigen::VectorXd next(n);
  double teleport = (1.0 - damping) / static_cast<double>(g.n);
  for (int iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (int i = 0; i < g.n; ++i) {
      if (out_adj[static_cast<std::size_t>(i)].empty()) dangling += p[i];
    }
    next.setConstant(teleport + damping * dangling / static_cast<double>(g.n));
    for (int i = 0; i < g.n; ++i) {
      const auto& outs = out_adj[static_cast<std::size_t>(i)];
      if (outs.empty()) continue;
      double share = damping * p[i] / static_cast<double>(outs.size());
      for (int j : outs) next[j] += share;
    }
    double residual = (next - p).lpNorm<1>();
    p = next;
    if (residual < tol) return p;
  }
  double residual = 0.0;
  {
    // one more sweep to report the final residual honestly
    Eigen::VectorXd probe = p;
    double dangling = 0.0;
    for (int i = 0; i < g.n; ++i)
      if (out_adj[static_cast<std::size_t>(i)].empty()) dangling += p[i];
    next.setConstant(teleport + damping * dangling / static_cast<double>(g.n));
    for (int i = 0; i < g.n; ++i) {
      const auto& outs = out_adj[static_cast<std::size_t>(i)];
      if (outs.empty()) continue;
      double share = damping * p[i] / static_cast<double>(outs.size());
      for (int j : outs) next[j] += share;
    }
    residual = (next - probe).lpNorm<1>();
  }
  fail(ErrorCode::numeric,
       "pagerank did not converge in " + std::to_string(max_iter) + " iterations (residual " +
           format_double(residual) + ")");
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCode::domain, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(rank));
  auto hi = std::min(lo + 1, values.size() - 1);
  double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

CoreCountEstimate estimate_core_count(const EnclosingGraph& eg) {
  if (eg.nodes.empty()) fail(ErrorCode::domain, "empty enclosing graph");
  auto collapsed = collapse_multigraph(eg);
  const auto& g = collapsed.g;

  CoreCountEstimate out;
  out.scores = pagerank(g);

  std::vector<double> values(out.scores.data(), out.scores.data() + out.scores.size());
  double threshold = percentile(values, 90.0);
  std::vector<int> keep_mark(static_cast<std::size_t>(g.n), 0);
  for (int i = 0; i < g.n; ++i) {
    if (out.scores[i] >= threshold) {
      out.retained.push_back(i);
      keep_mark[static_cast<std::size_t>(i)] = 1;
    }
  }

  // Weak components of the retained induced subgraph via union-find.
  std::vector<int> parent(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) parent[static_cast<std::size_t>(i)] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& [i, j] : g.arcs) {
    if (!keep_mark[static_cast<std::size_t>(i)] || !keep_mark[static_cast<std::size_t>(j)]) continue;
    parent[static_cast<std::size_t>(find(i))] = find(j);
  }
  std::set<int> roots;
  for (int i : out.retained) roots.insert(find(i));
  out.component_count = static_cast<int>(roots.size());
  return out;
}

KRangeSummary krange_histogram(const std::vector<int>& component_counts) {
  if (component_counts.empty()) fail(ErrorCode::domain, "empty dataset");
  KRangeSummary out;
  for (int c : component_counts) ++out.histogram[c];
  out.k_min = out.histogram.begin()->first;
  out.k_max = out.histogram.rbegin()->first;
  return out;
}

}  // namespace dgib
