#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgib/types.hpp"

namespace dgib {

using Mat = Eigen::MatrixXd;

// Triples plus the vocabularies built while reading them. kg_entity_count
// remembers how many entities came from the triple file itself, so that
// build_joint_graph can warn about pair genes the KG never mentions.
struct TripleSet {
  std::vector<Triple> triples;
  Vocab entities;
  Vocab relations;
  std::int32_t kg_entity_count = 0;
};

// kg.tsv: head<TAB>relation<TAB>tail, one triple per line, UTF-8.
TripleSet load_triples(const std::string& path);

// pairs.tsv: gene_a<TAB>gene_b<TAB>label with label in {0,1}.
// Gene names are interned into `entities`.
std::vector<LabeledPair> load_pairs(const std::string& path, Vocab& entities);

// features.tsv: entity<TAB>comma-separated floats of width d0.
// Overrides rows of `features` for the listed entities.
void load_feature_overrides(const std::string& path, const Vocab& entities, Mat& features);

// The KG merged with SL-labeled edges for positive training pairs.
// Immutable after construction; safe to share across threads.
struct JointGraph {
  Vocab entities;
  Vocab relations;
  RelationId sl_relation = -1;

  struct Arc {
    RelationId relation;
    EntityId node;  // tail for out_edges, head for in_edges
  };
  std::vector<std::vector<Arc>> out_edges;  // indexed by head
  std::vector<std::vector<Arc>> in_edges;   // indexed by tail
  std::size_t edge_count = 0;

  Mat node_features;      // |V| x d0, learnable initialization
  Mat relation_features;  // |R| x d1

  std::vector<std::pair<EntityId, EntityId>> sl_pairs;  // positives baked in as edges
};

// Builds the joint graph. Feature tables are initialized uniformly in
// [-0.1, 0.1] from `seed`; `features_path`, when given, overrides node rows.
// Pair entities absent from the KG get fresh vocabulary slots (a warning is
// printed to stderr).
JointGraph build_joint_graph(const TripleSet& kg, const std::vector<LabeledPair>& sl,
                             int d0, int d1, std::uint64_t seed,
                             const std::optional<std::string>& features_path = std::nullopt);

// Pairwise enclosing subgraph: nodes within t undirected hops of both u and v
// (plus u and v themselves), with the direct SL edge between u and v removed
// before distances are measured so labels cannot leak through the topology.
struct EnclosingGraph {
  EntityId u = -1;
  EntityId v = -1;
  std::vector<EntityId> nodes;  // global ids; nodes[0] == u, nodes[1] == v

  struct Edge {
    int head;  // local index into nodes
    RelationId relation;
    int tail;
  };
  std::vector<Edge> edges;
};

EnclosingGraph extract_enclosing(const JointGraph& g, EntityId u, EntityId v, int t_hops);

// Draws n distinct unordered gene pairs outside the positive set, label 0.
// Deterministic per seed; throws Error(data) when the candidate space runs out.
std::vector<LabeledPair> sample_negatives(const std::vector<LabeledPair>& positives,
                                          const std::vector<EntityId>& genes,
                                          std::size_t n, std::uint64_t seed);

struct FoldSplit {
  int fold = 0;
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> test;
};

// Shuffles once by seed, then partitions into k folds whose sizes differ by
// at most one (earlier folds take the remainder).
std::vector<FoldSplit> kfold_split(const std::vector<LabeledPair>& pairs, int k,
                                   std::uint64_t seed);

}  // namespace dgib
