#include "dgib/motifs.hpp"

#include <algorithm>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dgib {

namespace {

// Permutations of three labels.
constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

int encode(const std::array<std::array<std::uint8_t, 3>, 3>& adj) {
  int code = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) code = (code << 1) | adj[r][c];
  return code;
}

std::array<std::array<std::uint8_t, 3>, 3> decode(int code) {
  std::array<std::array<std::uint8_t, 3>, 3> adj{};
  for (int r = 2; r >= 0; --r)
    for (int c = 2; c >= 0; --c) {
      adj[r][c] = static_cast<std::uint8_t>(code & 1);
      code >>= 1;
    }
  return adj;
}

// adj[perm[r]][perm[c]] placed at (r,c): relabels nodes by perm.
int permute_encoding(int code, const int* perm) {
  auto adj = decode(code);
  std::array<std::array<std::uint8_t, 3>, 3> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r][c] = adj[perm[r]][perm[c]];
  return encode(out);
}

bool weakly_connected3(const std::array<std::array<std::uint8_t, 3>, 3>& adj) {
  bool p01 = adj[0][1] || adj[1][0];
  bool p02 = adj[0][2] || adj[2][0];
  bool p12 = adj[1][2] || adj[2][1];
  return (p01 && p02) || (p01 && p12) || (p02 && p12);
}

}  // namespace

MotifCatalog::MotifCatalog() {
  class_of_.fill(0);
  std::set<int> canonicals;
  for (int bits = 0; bits < 64; ++bits) {
    // Spread the six off-diagonal bits into a 3x3 matrix, diagonal zero.
    std::array<std::array<std::uint8_t, 3>, 3> adj{};
    int b = bits;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (r == c) continue;
        adj[r][c] = static_cast<std::uint8_t>(b & 1);
        b >>= 1;
      }
    if (!weakly_connected3(adj)) continue;
    int code = encode(adj);
    int canonical = code;
    for (const auto& perm : kPerms) canonical = std::min(canonical, permute_encoding(code, perm));
    canonicals.insert(canonical);
  }
  for (int canonical : canonicals) {  // std::set gives ascending order
    Motif m;
    m.adj = decode(canonical);
    m.encoding = canonical;
    motifs_.push_back(m);
    int index = static_cast<int>(motifs_.size());
    for (const auto& perm : kPerms) class_of_[static_cast<std::size_t>(permute_encoding(canonical, perm))] = index;
  }
  if (motifs_.size() != kMotifCount) {
    fail(ErrorCode::numeric, "motif catalog enumeration produced " +
                                 std::to_string(motifs_.size()) + " classes, expected 13");
  }
}

const MotifCatalog& MotifCatalog::instance() {
  static MotifCatalog catalog;
  return catalog;
}

const Motif& MotifCatalog::motif(int motif_index) const {
  if (motif_index < 1 || motif_index > size()) {
    fail(ErrorCode::domain, "motif index " + std::to_string(motif_index) + " outside 1..13");
  }
  return motifs_[static_cast<std::size_t>(motif_index - 1)];
}

int MotifCatalog::classify(int encoding) const { return class_of_[static_cast<std::size_t>(encoding)]; }

DirectedGraph make_digraph(int n, const std::vector<std::pair<int, int>>& arcs) {
  DirectedGraph g;
  g.n = n;
  g.has.assign(static_cast<std::size_t>(n) * n, 0);
  g.arc_id.assign(static_cast<std::size_t>(n) * n, -1);
  for (const auto& [i, j] : arcs) {
    if (i < 0 || j < 0 || i >= n || j >= n) fail(ErrorCode::domain, "arc endpoint outside graph");
    if (i == j) continue;  // self-loops carry no motif slot
    auto idx = static_cast<std::size_t>(i) * n + j;
    if (g.has[idx]) continue;
    g.has[idx] = 1;
    g.arc_id[idx] = static_cast<int>(g.arcs.size());
    g.arcs.emplace_back(i, j);
  }
  g.und_adj.assign(static_cast<std::size_t>(n), {});
  for (const auto& [i, j] : g.arcs) {
    g.und_adj[static_cast<std::size_t>(i)].push_back(j);
    g.und_adj[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& adj : g.und_adj) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  return g;
}

CollapsedGraph collapse_multigraph(const EnclosingGraph& eg) {
  CollapsedGraph out;
  std::vector<std::pair<int, int>> arcs;
  arcs.reserve(eg.edges.size());
  for (const auto& e : eg.edges) arcs.emplace_back(e.head, e.tail);
  out.g = make_digraph(static_cast<int>(eg.nodes.size()), arcs);
  out.edge_segments.assign(out.g.arcs.size(), {});
  for (std::size_t e = 0; e < eg.edges.size(); ++e) {
    const auto& edge = eg.edges[e];
    if (edge.head == edge.tail) continue;
    int a = out.g.arc_index(edge.head, edge.tail);
    out.edge_segments[static_cast<std::size_t>(a)].push_back(static_cast<int>(e));
  }
  return out;
}

namespace {

struct TripleHit {
  std::array<int, 3> nodes;  // ordering that equals the canonical motif matrix
  int motif_index;           // 1-based
};

// Per 6-bit arc pattern over a sorted triple: its motif class and the
// orderings (permutations) whose induced matrix equals the canonical one.
struct PatternInfo {
  int motif_index = 0;                 // 0 = disconnected
  std::vector<std::array<int, 3>> orderings;
};

// Bit layout for a sorted triple (x,y,z): bit q enumerates ordered pairs
// (x,y),(x,z),(y,x),(y,z),(z,x),(z,y) in row-major order over (0,1,2).
int triple_pattern(const DirectedGraph& g, int x, int y, int z) {
  const int nodes[3] = {x, y, z};
  int patt = 0, q = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      if (r == c) continue;
      patt |= (g.arc(nodes[r], nodes[c]) ? 1 : 0) << q;
      ++q;
    }
  return patt;
}

int pattern_to_encoding(int patt) {
  std::array<std::array<std::uint8_t, 3>, 3> adj{};
  int q = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      if (r == c) continue;
      adj[r][c] = static_cast<std::uint8_t>((patt >> q) & 1);
      ++q;
    }
  return encode(adj);
}

const std::array<PatternInfo, 64>& pattern_table() {
  static const std::array<PatternInfo, 64> table = [] {
    const auto& catalog = MotifCatalog::instance();
    std::array<PatternInfo, 64> t{};
    for (int patt = 0; patt < 64; ++patt) {
      int code = pattern_to_encoding(patt);
      int cls = catalog.classify(code);
      t[static_cast<std::size_t>(patt)].motif_index = cls;
      if (cls == 0) continue;
      int canonical = catalog.motif(cls).encoding;
      for (const auto& perm : kPerms) {
        // Ordering V = (t[perm[0]], t[perm[1]], t[perm[2]]) induces the
        // relabeled matrix; keep perms that land exactly on the canonical.
        if (permute_encoding(code, perm) == canonical) {
          t[static_cast<std::size_t>(patt)].orderings.push_back({perm[0], perm[1], perm[2]});
        }
      }
    }
    return t;
  }();
  return table;
}

// Visits each connected unordered triple exactly once: open chains from their
// unique center, triangles from their smallest node acting as center.
template <typename Fn>
void for_each_connected_triple(const DirectedGraph& g, int center, Fn&& fn) {
  const auto& nb = g.und_adj[static_cast<std::size_t>(center)];
  for (std::size_t ai = 0; ai < nb.size(); ++ai) {
    for (std::size_t bi = ai + 1; bi < nb.size(); ++bi) {
      int a = nb[ai], b = nb[bi];
      bool ab = g.arc(a, b) || g.arc(b, a);
      if (ab && (center > a || center > b)) continue;  // triangle: only min center emits
      int x = center, y = a, z = b;  // sort ascending for a stable pattern key
      if (x > y) std::swap(x, y);
      if (y > z) std::swap(y, z);
      if (x > y) std::swap(x, y);
      fn(x, y, z);
    }
  }
}

}  // namespace

std::array<InstanceSet, kMotifCount> enumerate_instances(const DirectedGraph& g) {
  const auto& table = pattern_table();
  std::array<InstanceSet, kMotifCount> out;
  for (int center = 0; center < g.n; ++center) {
    for_each_connected_triple(g, center, [&](int x, int y, int z) {
      int patt = triple_pattern(g, x, y, z);
      const auto& info = table[static_cast<std::size_t>(patt)];
      if (info.motif_index == 0) return;
      auto& set = out[static_cast<std::size_t>(info.motif_index - 1)];
      const int nodes[3] = {x, y, z};
      // The ordering fixes node roles; the arc set is shared by every
      // automorphic labeling, so store one record with a multiplicity.
      const auto& first = info.orderings.front();
      set.nodes.push_back({nodes[first[0]], nodes[first[1]], nodes[first[2]]});
      std::array<int, 6> arcs{-1, -1, -1, -1, -1, -1};
      int count = 0;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          if (r == c) continue;
          if (g.arc(nodes[r], nodes[c])) arcs[static_cast<std::size_t>(count++)] = g.arc_index(nodes[r], nodes[c]);
        }
      set.arcs.push_back(arcs);
      set.arc_count.push_back(static_cast<std::uint8_t>(count));
      set.multiplicity.push_back(static_cast<std::uint8_t>(info.orderings.size()));
    });
  }
  return out;
}

std::vector<std::array<int, 3>> match_instances(const DirectedGraph& g, int motif_index) {
  MotifCatalog::instance().motif(motif_index);  // validates the index
  const auto& table = pattern_table();
  std::vector<std::array<int, 3>> out;
  for (int center = 0; center < g.n; ++center) {
    for_each_connected_triple(g, center, [&](int x, int y, int z) {
      int patt = triple_pattern(g, x, y, z);
      const auto& info = table[static_cast<std::size_t>(patt)];
      if (info.motif_index != motif_index) return;
      const int nodes[3] = {x, y, z};
      for (const auto& ord : info.orderings) {
        out.push_back({nodes[ord[0]], nodes[ord[1]], nodes[ord[2]]});
      }
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void scatter_triple(Mat& m, int x, int y, int z, double w) {
  m(x, y) += w;
  m(y, x) += w;
  m(x, z) += w;
  m(z, x) += w;
  m(y, z) += w;
  m(z, y) += w;
}

}  // namespace

std::array<Mat, kMotifCount> motif_adjacency_all(const DirectedGraph& g) {
  const auto& table = pattern_table();
  std::array<Mat, kMotifCount> out;
  for (auto& m : out) m = Mat::Zero(g.n, g.n);

#ifdef _OPENMP
  int threads = omp_get_max_threads();
  if (threads > 1 && g.n >= 64) {
    std::vector<std::array<Mat, kMotifCount>> partial(static_cast<std::size_t>(threads));
#pragma omp parallel
    {
      int tid = omp_get_thread_num();
      auto& mine = partial[static_cast<std::size_t>(tid)];
      for (auto& m : mine) m = Mat::Zero(g.n, g.n);
#pragma omp for schedule(dynamic, 16)
      for (int center = 0; center < g.n; ++center) {
        for_each_connected_triple(g, center, [&](int x, int y, int z) {
          int patt = triple_pattern(g, x, y, z);
          const auto& info = table[static_cast<std::size_t>(patt)];
          if (info.motif_index == 0) return;
          scatter_triple(mine[static_cast<std::size_t>(info.motif_index - 1)], x, y, z,
                         static_cast<double>(info.orderings.size()));
        });
      }
    }
    // Integer-valued contributions: summation order cannot change the result.
    for (const auto& part : partial)
      for (int i = 0; i < kMotifCount; ++i) out[static_cast<std::size_t>(i)] += part[static_cast<std::size_t>(i)];
    return out;
  }
#endif

  for (int center = 0; center < g.n; ++center) {
    for_each_connected_triple(g, center, [&](int x, int y, int z) {
      int patt = triple_pattern(g, x, y, z);
      const auto& info = table[static_cast<std::size_t>(patt)];
      if (info.motif_index == 0) return;
      scatter_triple(out[static_cast<std::size_t>(info.motif_index - 1)], x, y, z,
                     static_cast<double>(info.orderings.size()));
    });
  }
  return out;
}

Mat motif_adjacency(const DirectedGraph& g, int motif_index) {
  MotifCatalog::instance().motif(motif_index);
  return motif_adjacency_all(g)[static_cast<std::size_t>(motif_index - 1)];
}

Mat weighted_motif_adjacency(const DirectedGraph& g, const Eigen::VectorXd& arc_gates,
                             int motif_index) {
  MotifCatalog::instance().motif(motif_index);
  if (arc_gates.size() != static_cast<Eigen::Index>(g.arcs.size())) {
    fail(ErrorCode::shape, "gate vector length does not match arc count");
  }
  for (Eigen::Index i = 0; i < arc_gates.size(); ++i) {
    if (!(arc_gates[i] >= 0.0 && arc_gates[i] <= 1.0)) {
      fail(ErrorCode::domain, "gate value outside [0,1]");
    }
  }
  auto instances = enumerate_instances(g);
  const auto& set = instances[static_cast<std::size_t>(motif_index - 1)];
  Mat m = Mat::Zero(g.n, g.n);
  for (std::size_t t = 0; t < set.nodes.size(); ++t) {
    double w = static_cast<double>(set.multiplicity[t]);
    for (int a = 0; a < set.arc_count[t]; ++a) w *= arc_gates[set.arcs[t][static_cast<std::size_t>(a)]];
    scatter_triple(m, set.nodes[t][0], set.nodes[t][1], set.nodes[t][2], w);
  }
  return m;
}

namespace {

std::array<std::uint64_t, kMotifCount> census_impl(const DirectedGraph& g, bool parallel) {
  const auto& table = pattern_table();
  std::array<std::uint64_t, kMotifCount> totals{};
  if (parallel) {
#ifdef _OPENMP
    std::array<std::uint64_t, kMotifCount> acc{};
#pragma omp parallel
    {
      std::array<std::uint64_t, kMotifCount> mine{};
#pragma omp for schedule(dynamic, 16)
      for (int center = 0; center < g.n; ++center) {
        for_each_connected_triple(g, center, [&](int x, int y, int z) {
          int patt = triple_pattern(g, x, y, z);
          const auto& info = table[static_cast<std::size_t>(patt)];
          if (info.motif_index == 0) return;
          mine[static_cast<std::size_t>(info.motif_index - 1)] += info.orderings.size();
        });
      }
#pragma omp critical
      for (int i = 0; i < kMotifCount; ++i) acc[static_cast<std::size_t>(i)] += mine[static_cast<std::size_t>(i)];
    }
    return acc;
#endif
  }
  for (int center = 0; center < g.n; ++center) {
    for_each_connected_triple(g, center, [&](int x, int y, int z) {
      int patt = triple_pattern(g, x, y, z);
      const auto& info = table[static_cast<std::size_t>(patt)];
      if (info.motif_index == 0) return;
      totals[static_cast<std::size_t>(info.motif_index - 1)] += info.orderings.size();
    });
  }
  return totals;
}

}  // namespace

std::array<std::uint64_t, kMotifCount> census_counts(const DirectedGraph& g) {
  return census_impl(g, true);
}

std::array<std::uint64_t, kMotifCount> census_counts_serial(const DirectedGraph& g) {
  return census_impl(g, false);
}

}  // namespace dgib
