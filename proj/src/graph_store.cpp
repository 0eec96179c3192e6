#include "dgib/graph_store.hpp"

#include <algorithm>
#include <deque>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "dgib/io.hpp"
#include "dgib/rng.hpp"

namespace dgib {

namespace {

std::vector<std::string> nonempty_lines(const std::string& text, std::vector<int>* line_numbers) {
  std::vector<std::string> lines;
  std::string cur;
  int lineno = 0;
  std::istringstream in(text);
  while (std::getline(in, cur)) {
    ++lineno;
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    if (cur.empty()) continue;
    lines.push_back(cur);
    if (line_numbers) line_numbers->push_back(lineno);
  }
  return lines;
}

}  // namespace

TripleSet load_triples(const std::string& path) {
  TripleSet out;
  std::vector<int> linenos;
  auto lines = nonempty_lines(read_file(path), &linenos);
  out.triples.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto fields = split(lines[i], '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      fail(ErrorCode::parse,
           path + ": line " + std::to_string(linenos[i]) + ": expected head<TAB>relation<TAB>tail");
    }
    Triple t;
    t.head = out.entities.intern(fields[0]);
    t.relation = out.relations.intern(fields[1]);
    t.tail = out.entities.intern(fields[2]);
    out.triples.push_back(t);
  }
  out.kg_entity_count = out.entities.size();
  return out;
}

std::vector<LabeledPair> load_pairs(const std::string& path, Vocab& entities) {
  std::vector<LabeledPair> out;
  std::vector<int> linenos;
  auto lines = nonempty_lines(read_file(path), &linenos);
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto fields = split(lines[i], '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      fail(ErrorCode::parse,
           path + ": line " + std::to_string(linenos[i]) + ": expected gene_a<TAB>gene_b<TAB>label");
    }
    if (fields[2] != "0" && fields[2] != "1") {
      fail(ErrorCode::parse,
           path + ": line " + std::to_string(linenos[i]) + ": label must be 0 or 1, got '" + fields[2] + "'");
    }
    LabeledPair p;
    p.u = entities.intern(fields[0]);
    p.v = entities.intern(fields[1]);
    p.label = fields[2] == "1" ? 1 : 0;
    if (p.u == p.v) {
      fail(ErrorCode::parse,
           path + ": line " + std::to_string(linenos[i]) + ": pair genes must differ");
    }
    out.push_back(p);
  }
  return out;
}

void load_feature_overrides(const std::string& path, const Vocab& entities, Mat& features) {
  std::vector<int> linenos;
  auto lines = nonempty_lines(read_file(path), &linenos);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto fields = split(lines[i], '\t');
    if (fields.size() != 2) {
      fail(ErrorCode::parse,
           path + ": line " + std::to_string(linenos[i]) + ": expected entity<TAB>floats");
    }
    auto id = entities.lookup(fields[0]);
    if (id < 0) {
      fail(ErrorCode::data,
           path + ": line " + std::to_string(linenos[i]) + ": unknown entity '" + fields[0] + "'");
    }
    auto values = split(fields[1], ',');
    if (static_cast<Eigen::Index>(values.size()) != features.cols()) {
      fail(ErrorCode::shape, path + ": line " + std::to_string(linenos[i]) + ": feature width " +
                                 std::to_string(values.size()) + " != d0 " +
                                 std::to_string(features.cols()));
    }
    for (std::size_t j = 0; j < values.size(); ++j) {
      try {
        features(id, static_cast<Eigen::Index>(j)) = std::stod(values[j]);
      } catch (const std::exception&) {
        fail(ErrorCode::parse,
             path + ": line " + std::to_string(linenos[i]) + ": bad float '" + values[j] + "'");
      }
    }
  }
}

JointGraph build_joint_graph(const TripleSet& kg, const std::vector<LabeledPair>& sl,
                             int d0, int d1, std::uint64_t seed,
                             const std::optional<std::string>& features_path) {
  if (d0 < 1 || d1 < 1) fail(ErrorCode::config, "feature widths d0 and d1 must be >= 1");

  JointGraph g;
  g.entities = kg.entities;
  g.relations = kg.relations;
  for (const auto& p : sl) {
    if (p.u >= g.entities.size() || p.v >= g.entities.size()) {
      fail(ErrorCode::data, "pair references entity id outside the shared vocabulary");
    }
    if (p.u >= kg.kg_entity_count || p.v >= kg.kg_entity_count) {
      std::cerr << "warning: pair entity '"
                << g.entities.name(p.u >= kg.kg_entity_count ? p.u : p.v)
                << "' absent from the KG; added with a fresh feature row\n";
    }
  }
  g.sl_relation = g.relations.intern("SL");

  auto n = g.entities.size();
  g.out_edges.assign(static_cast<std::size_t>(n), {});
  g.in_edges.assign(static_cast<std::size_t>(n), {});

  auto add_edge = [&g](EntityId h, RelationId r, EntityId t) {
    g.out_edges[static_cast<std::size_t>(h)].push_back({r, t});
    g.in_edges[static_cast<std::size_t>(t)].push_back({r, h});
    ++g.edge_count;
  };

  for (const auto& t : kg.triples) add_edge(t.head, t.relation, t.tail);
  for (const auto& p : sl) {
    if (p.label == 1) {
      add_edge(p.u, g.sl_relation, p.v);
      g.sl_pairs.emplace_back(p.u, p.v);
    }
  }

  Rng rng(mix_seed(seed, 0x0f17));
  g.node_features.resize(n, d0);
  for (Eigen::Index i = 0; i < g.node_features.rows(); ++i)
    for (Eigen::Index j = 0; j < g.node_features.cols(); ++j)
      g.node_features(i, j) = rng.uniform(-0.1, 0.1);
  g.relation_features.resize(g.relations.size(), d1);
  for (Eigen::Index i = 0; i < g.relation_features.rows(); ++i)
    for (Eigen::Index j = 0; j < g.relation_features.cols(); ++j)
      g.relation_features(i, j) = rng.uniform(-0.1, 0.1);

  if (features_path) load_feature_overrides(*features_path, g.entities, g.node_features);
  return g;
}

namespace {

// Undirected BFS out to depth t, skipping the masked (u,v) arcs.
std::vector<int> bfs_distances(const JointGraph& g, EntityId start, int t,
                               EntityId mask_a, EntityId mask_b) {
  std::vector<int> dist(static_cast<std::size_t>(g.entities.size()), -1);
  std::deque<EntityId> queue;
  dist[static_cast<std::size_t>(start)] = 0;
  queue.push_back(start);
  auto masked = [&](EntityId x, EntityId y) {
    return (x == mask_a && y == mask_b) || (x == mask_b && y == mask_a);
  };
  while (!queue.empty()) {
    EntityId x = queue.front();
    queue.pop_front();
    int dx = dist[static_cast<std::size_t>(x)];
    if (dx >= t) continue;
    auto visit = [&](EntityId y) {
      if (masked(x, y)) return;  // SL target edge, both directions
      if (dist[static_cast<std::size_t>(y)] < 0) {
        dist[static_cast<std::size_t>(y)] = dx + 1;
        queue.push_back(y);
      }
    };
    for (const auto& arc : g.out_edges[static_cast<std::size_t>(x)]) visit(arc.node);
    for (const auto& arc : g.in_edges[static_cast<std::size_t>(x)]) visit(arc.node);
  }
  return dist;
}

}  // namespace

EnclosingGraph extract_enclosing(const JointGraph& g, EntityId u, EntityId v, int t_hops) {
  if (u == v) fail(ErrorCode::domain, "invalid pair: genes must differ");
  if (u < 0 || u >= g.entities.size() || v < 0 || v >= g.entities.size()) {
    fail(ErrorCode::data, "pair entity outside the vocabulary");
  }
  if (t_hops < 0) fail(ErrorCode::domain, "hop count must be >= 0");

  // Distances are measured with the pair's own SL edge masked; only the SL
  // relation between u and v is removed, any KG relation between them stays.
  auto du = bfs_distances(g, u, t_hops, u, v);
  auto dv = bfs_distances(g, v, t_hops, u, v);

  EnclosingGraph eg;
  eg.u = u;
  eg.v = v;
  eg.nodes.push_back(u);
  eg.nodes.push_back(v);
  std::vector<EntityId> rest;
  for (EntityId x = 0; x < g.entities.size(); ++x) {
    if (x == u || x == v) continue;
    if (du[static_cast<std::size_t>(x)] >= 0 && dv[static_cast<std::size_t>(x)] >= 0) {
      rest.push_back(x);
    }
  }
  eg.nodes.insert(eg.nodes.end(), rest.begin(), rest.end());

  std::vector<int> local(static_cast<std::size_t>(g.entities.size()), -1);
  for (std::size_t i = 0; i < eg.nodes.size(); ++i)
    local[static_cast<std::size_t>(eg.nodes[i])] = static_cast<int>(i);

  for (EntityId h : eg.nodes) {
    for (const auto& arc : g.out_edges[static_cast<std::size_t>(h)]) {
      int lt = local[static_cast<std::size_t>(arc.node)];
      if (lt < 0) continue;
      bool target_sl = arc.relation == g.sl_relation &&
                       ((h == u && arc.node == v) || (h == v && arc.node == u));
      if (target_sl) continue;
      eg.edges.push_back({local[static_cast<std::size_t>(h)], arc.relation, lt});
    }
  }
  return eg;
}

std::vector<LabeledPair> sample_negatives(const std::vector<LabeledPair>& positives,
                                          const std::vector<EntityId>& genes,
                                          std::size_t n, std::uint64_t seed) {
  auto key = [](EntityId a, EntityId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  std::unordered_set<std::uint64_t> taken;
  for (const auto& p : positives) taken.insert(key(p.u, p.v));

  std::size_t m = genes.size();
  std::size_t universe = m * (m > 0 ? m - 1 : 0) / 2;
  std::size_t positives_in_universe = 0;
  {
    std::unordered_set<EntityId> gene_set(genes.begin(), genes.end());
    for (const auto& p : positives) {
      if (gene_set.count(p.u) && gene_set.count(p.v) && p.u != p.v) ++positives_in_universe;
    }
  }
  if (universe < positives_in_universe + n) {
    fail(ErrorCode::data, "negative sampling exhausted: need " + std::to_string(n) +
                              " unknown pairs but only " +
                              std::to_string(universe - positives_in_universe) + " exist");
  }

  Rng rng(mix_seed(seed, 0x9e9));
  std::vector<LabeledPair> out;
  out.reserve(n);
  std::size_t attempts = 0;
  const std::size_t max_attempts = 60 * n + 1000;
  while (out.size() < n && attempts < max_attempts) {
    ++attempts;
    EntityId a = genes[rng.below(m)];
    EntityId b = genes[rng.below(m)];
    if (a == b) continue;
    auto k = key(a, b);
    if (taken.count(k)) continue;
    taken.insert(k);
    out.push_back({std::min(a, b), std::max(a, b), 0});
  }
  if (out.size() < n) {
    // Dense positive sets defeat rejection sampling; enumerate what is left.
    std::vector<LabeledPair> remaining;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        auto k = key(genes[i], genes[j]);
        if (taken.count(k)) continue;
        remaining.push_back({std::min(genes[i], genes[j]), std::max(genes[i], genes[j]), 0});
      }
    }
    std::sort(remaining.begin(), remaining.end(), [](const LabeledPair& a, const LabeledPair& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    shuffle(remaining, rng);
    for (const auto& p : remaining) {
      if (out.size() >= n) break;
      out.push_back(p);
    }
  }
  if (out.size() < n) {
    fail(ErrorCode::data, "negative sampling exhausted: short by " +
                              std::to_string(n - out.size()) + " pairs");
  }
  return out;
}

std::vector<FoldSplit> kfold_split(const std::vector<LabeledPair>& pairs, int k,
                                   std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::config, "k-fold split requires k >= 2");
  if (pairs.size() < static_cast<std::size_t>(k)) {
    fail(ErrorCode::config, "k-fold split requires at least k pairs");
  }
  std::vector<LabeledPair> shuffled = pairs;
  Rng rng(mix_seed(seed, 0xf01d));
  shuffle(shuffled, rng);

  std::size_t n = shuffled.size();
  std::size_t base = n / static_cast<std::size_t>(k);
  std::size_t extra = n % static_cast<std::size_t>(k);

  std::vector<FoldSplit> folds;
  std::size_t start = 0;
  for (int f = 0; f < k; ++f) {
    std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    FoldSplit fold;
    fold.fold = f;
    fold.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(start + len));
    fold.train.reserve(n - len);
    fold.train.insert(fold.train.end(), shuffled.begin(),
                      shuffled.begin() + static_cast<std::ptrdiff_t>(start));
    fold.train.insert(fold.train.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(start + len),
                      shuffled.end());
    folds.push_back(std::move(fold));
    start += len;
  }
  return folds;
}

}  // namespace dgib
