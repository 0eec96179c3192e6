#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "dgib/graph_store.hpp"

namespace dgib {

inline constexpr int kMotifCount = 13;

// One connected 3-node digraph pattern. `encoding` is the row-major 9-bit
// code of the adjacency matrix with bit (0,0) most significant; the catalog
// stores the lexicographically minimal encoding of each isomorphism class.
struct Motif {
  std::array<std::array<std::uint8_t, 3>, 3> adj{};
  int encoding = 0;
};

// The 13 weakly connected directed 3-node motifs, in a fixed canonical order.
class MotifCatalog {
 public:
  static const MotifCatalog& instance();

  int size() const { return static_cast<int>(motifs_.size()); }

  // motif_index is 1-based (1..13) throughout the public surface.
  const Motif& motif(int motif_index) const;

  // Maps a 9-bit adjacency encoding to its 1-based class, 0 if disconnected.
  int classify(int encoding) const;

 private:
  MotifCatalog();
  std::vector<Motif> motifs_;
  std::array<int, 512> class_of_{};
};

// Simple digraph view used by the motif kernels: parallel relation edges
// collapse to one arc, self-loops are dropped.
struct DirectedGraph {
  int n = 0;
  std::vector<std::pair<int, int>> arcs;        // deduped (head, tail), head != tail
  std::vector<std::vector<int>> und_adj;        // sorted undirected neighbor lists
  std::vector<std::uint8_t> has;                // dense n*n lookup
  std::vector<int> arc_id;                      // dense n*n -> arc index, -1 absent

  bool arc(int i, int j) const { return has[static_cast<std::size_t>(i) * n + j] != 0; }
  int arc_index(int i, int j) const { return arc_id[static_cast<std::size_t>(i) * n + j]; }
};

DirectedGraph make_digraph(int n, const std::vector<std::pair<int, int>>& arcs);

// Collapsed view of an enclosing graph. edge_segments[a] lists the multigraph
// edge indices that collapsed into arc a (used to gate an arc by the maximum
// gate among its parallel edges).
struct CollapsedGraph {
  DirectedGraph g;
  std::vector<std::vector<int>> edge_segments;
};

CollapsedGraph collapse_multigraph(const EnclosingGraph& eg);

// Unordered motif instances with their automorphism multiplicity. Each entry
// stands for `multiplicity` ordered tuples that all induce the same arcs.
struct InstanceSet {
  std::vector<std::array<int, 3>> nodes;
  std::vector<std::array<int, 6>> arcs;  // arc indices, -1 padded
  std::vector<std::uint8_t> arc_count;
  std::vector<std::uint8_t> multiplicity;
};

// One pass over all connected triples; results indexed by motif (0-based
// internally, slot i holds motif i+1).
std::array<InstanceSet, kMotifCount> enumerate_instances(const DirectedGraph& g);

// Every ordered 3-tuple of distinct nodes whose induced adjacency equals the
// motif exactly.
std::vector<std::array<int, 3>> match_instances(const DirectedGraph& g, int motif_index);

// Exact motif-based adjacency: entry (j,l) counts ordered matched tuples whose
// node set contains both j and l. Symmetric, zero diagonal.
Mat motif_adjacency(const DirectedGraph& g, int motif_index);
std::array<Mat, kMotifCount> motif_adjacency_all(const DirectedGraph& g);

// Gate-weighted variant: instances are matched on the binary support, each
// contributes the product of its arc gates. Reduces to motif_adjacency at
// gates == 1. arc_gates must lie in [0,1].
Mat weighted_motif_adjacency(const DirectedGraph& g, const Eigen::VectorXd& arc_gates,
                             int motif_index);

// Ordered-instance totals for all 13 motifs (OpenMP-parallel census kernel).
std::array<std::uint64_t, kMotifCount> census_counts(const DirectedGraph& g);
std::array<std::uint64_t, kMotifCount> census_counts_serial(const DirectedGraph& g);

}  // namespace dgib
