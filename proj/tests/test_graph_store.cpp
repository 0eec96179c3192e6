#include <filesystem>
#include <set>

#include "dgib/graph_store.hpp"
#include "dgib/io.hpp"
#include "doctest.h"

using namespace dgib;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

JointGraph tiny_graph() {
  TripleSet kg;
  // a -> b -> c and a -> c, one extra spoke d reachable from both ends
  EntityId a = kg.entities.intern("a"), b = kg.entities.intern("b"), c = kg.entities.intern("c");
  EntityId d = kg.entities.intern("d");
  RelationId r = kg.relations.intern("r");
  kg.triples = {{a, r, b}, {b, r, c}, {a, r, c}, {a, r, d}, {c, r, d}};
  kg.kg_entity_count = kg.entities.size();
  std::vector<LabeledPair> sl = {{a, c, 1}};
  return build_joint_graph(kg, sl, 4, 3, 42);
}

}  // namespace

TEST_SUITE("graph-store") {
  TEST_CASE("load_triples parses a single line") {
    auto path = temp_path("dgib_kg1.tsv");
    write_file_atomic(path, "BRCA1\tSL\tPARP1\n");
    auto set = load_triples(path);
    CHECK(set.triples.size() == 1);
    CHECK(set.entities.size() == 2);
    CHECK(set.relations.size() == 1);
    CHECK(set.entities.name(set.triples[0].head) == "BRCA1");
  }

  TEST_CASE("load_triples of an empty file is empty, not an error") {
    auto path = temp_path("dgib_kg2.tsv");
    write_file_atomic(path, "");
    auto set = load_triples(path);
    CHECK(set.triples.empty());
    CHECK(set.entities.size() == 0);
  }

  TEST_CASE("malformed line reports its line number") {
    auto path = temp_path("dgib_kg3.tsv");
    write_file_atomic(path, "a\tb\n");
    try {
      load_triples(path);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse);
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }

  TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(load_triples(temp_path("dgib_does_not_exist.tsv")), Error);
  }

  TEST_CASE("build_joint_graph adds one SL edge per positive pair") {
    TripleSet kg;
    EntityId a = kg.entities.intern("a"), b = kg.entities.intern("b");
    RelationId r = kg.relations.intern("r");
    kg.triples = {{a, r, b}};
    kg.kg_entity_count = 2;
    auto g = build_joint_graph(kg, {{a, b, 1}}, 4, 3, 7);
    CHECK(g.relations.contains("SL"));
    CHECK(g.relations.size() == 2);
    CHECK(g.edge_count == 2);
    CHECK(g.sl_pairs.size() == 1);
    CHECK(g.node_features.rows() == 2);
    CHECK(g.node_features.cols() == 4);
    CHECK((g.node_features.array().abs() <= 0.1).all());
  }

  TEST_CASE("label-0 pairs carry no SL edge") {
    TripleSet kg;
    EntityId a = kg.entities.intern("a"), b = kg.entities.intern("b");
    RelationId r = kg.relations.intern("r");
    kg.triples = {{a, r, b}};
    kg.kg_entity_count = 2;
    auto g = build_joint_graph(kg, {{a, b, 0}}, 4, 3, 7);
    CHECK(g.edge_count == 1);
    CHECK(g.sl_pairs.empty());
  }

  TEST_CASE("degenerate KG: pairs alone build a 2-node graph") {
    TripleSet kg;
    EntityId a = kg.entities.intern("a"), b = kg.entities.intern("b");
    kg.kg_entity_count = 0;  // neither entity came from the KG
    auto g = build_joint_graph(kg, {{a, b, 1}}, 4, 3, 7);
    CHECK(g.entities.size() == 2);
    CHECK(g.edge_count == 1);
  }

  TEST_CASE("joint graph construction is deterministic per seed") {
    auto g1 = tiny_graph();
    auto g2 = tiny_graph();
    CHECK(g1.node_features == g2.node_features);
    CHECK(g1.relation_features == g2.relation_features);
  }

  TEST_CASE("extract_enclosing at t=0 keeps only the endpoints") {
    auto g = tiny_graph();
    auto eg = extract_enclosing(g, 0, 1, 0);
    CHECK(eg.nodes == std::vector<EntityId>{0, 1});
    CHECK(eg.edges.size() == 1);  // the KG edge a->b survives, only SL is removed
  }

  TEST_CASE("path u-a-v at t=1 yields the 3-node path") {
    TripleSet kg;
    EntityId u = kg.entities.intern("u"), a = kg.entities.intern("a"), v = kg.entities.intern("v");
    RelationId r = kg.relations.intern("r");
    kg.triples = {{u, r, a}, {a, r, v}};
    kg.kg_entity_count = 3;
    auto g = build_joint_graph(kg, {{u, v, 1}}, 4, 3, 9);
    auto eg = extract_enclosing(g, u, v, 1);
    CHECK(eg.nodes == std::vector<EntityId>{u, v, a});
    CHECK(eg.edges.size() == 2);
  }

  TEST_CASE("the target SL edge never appears in its own enclosing graph") {
    auto g = tiny_graph();
    auto eg = extract_enclosing(g, 0, 2, 2);
    for (const auto& e : eg.edges) {
      bool is_target = e.relation == g.sl_relation &&
                       ((eg.nodes[static_cast<std::size_t>(e.head)] == 0 &&
                         eg.nodes[static_cast<std::size_t>(e.tail)] == 2) ||
                        (eg.nodes[static_cast<std::size_t>(e.head)] == 2 &&
                         eg.nodes[static_cast<std::size_t>(e.tail)] == 0));
      CHECK_FALSE(is_target);
    }
  }

  TEST_CASE("pair adjacent via SL only: that edge is absent at t=1") {
    TripleSet kg;
    EntityId u = kg.entities.intern("u"), v = kg.entities.intern("v");
    kg.kg_entity_count = 2;
    auto g = build_joint_graph(kg, {{u, v, 1}}, 4, 3, 11);
    auto eg = extract_enclosing(g, u, v, 1);
    CHECK(eg.edges.empty());
    CHECK(eg.nodes == std::vector<EntityId>{u, v});
  }

  TEST_CASE("every node in the enclosing graph is within t of both endpoints") {
    auto g = tiny_graph();
    int t = 2;
    auto eg = extract_enclosing(g, 0, 2, t);
    // undirected BFS on the extracted subgraph itself
    auto local_dist = [&](int start) {
      std::vector<int> dist(eg.nodes.size(), -1);
      std::vector<int> queue = {start};
      dist[static_cast<std::size_t>(start)] = 0;
      for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        int x = queue[qi];
        for (const auto& e : eg.edges) {
          int other = -1;
          if (e.head == x) other = e.tail;
          if (e.tail == x) other = e.head;
          if (other >= 0 && dist[static_cast<std::size_t>(other)] < 0) {
            dist[static_cast<std::size_t>(other)] = dist[static_cast<std::size_t>(x)] + 1;
            queue.push_back(other);
          }
        }
      }
      return dist;
    };
    auto du = local_dist(0);
    auto dv = local_dist(1);
    for (std::size_t i = 2; i < eg.nodes.size(); ++i) {
      CHECK(du[i] >= 0);
      CHECK(du[i] <= t);
      CHECK(dv[i] >= 0);
      CHECK(dv[i] <= t);
    }
  }

  TEST_CASE("u == v is an invalid pair") {
    auto g = tiny_graph();
    CHECK_THROWS_AS(extract_enclosing(g, 0, 0, 2), Error);
  }

  TEST_CASE("sample_negatives: exhaustion is an error naming the shortfall") {
    std::vector<LabeledPair> pos = {{0, 1, 1}};
    try {
      sample_negatives(pos, {0, 1}, 1, 3);
      FAIL("expected exhaustion");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::data);
    }
  }

  TEST_CASE("sample_negatives: forced candidate set") {
    std::vector<LabeledPair> pos = {{0, 1, 1}};
    auto neg = sample_negatives(pos, {0, 1, 2}, 2, 3);
    REQUIRE(neg.size() == 2);
    std::set<std::pair<EntityId, EntityId>> got;
    for (const auto& p : neg) {
      CHECK(p.label == 0);
      got.insert({p.u, p.v});
    }
    CHECK(got == std::set<std::pair<EntityId, EntityId>>{{0, 2}, {1, 2}});
  }

  TEST_CASE("sample_negatives: deterministic, disjoint from positives") {
    std::vector<LabeledPair> pos;
    std::vector<EntityId> genes;
    for (EntityId i = 0; i < 30; ++i) genes.push_back(i);
    for (EntityId i = 0; i < 10; ++i) pos.push_back({i, static_cast<EntityId>(i + 10), 1});
    auto n1 = sample_negatives(pos, genes, 10, 99);
    auto n2 = sample_negatives(pos, genes, 10, 99);
    REQUIRE(n1.size() == 10);
    for (std::size_t i = 0; i < n1.size(); ++i) {
      CHECK(n1[i].u == n2[i].u);
      CHECK(n1[i].v == n2[i].v);
      for (const auto& p : pos) CHECK_FALSE(same_pair(p, n1[i]));
    }
  }

  TEST_CASE("kfold: sizes and the partition property") {
    std::vector<LabeledPair> pairs;
    for (EntityId i = 0; i < 11; ++i) pairs.push_back({i, static_cast<EntityId>(i + 100), i % 2});
    auto folds = kfold_split(pairs, 5, 17);
    REQUIRE(folds.size() == 5);
    std::multiset<int> sizes;
    std::set<std::pair<EntityId, EntityId>> all_test;
    for (const auto& f : folds) {
      sizes.insert(static_cast<int>(f.test.size()));
      CHECK(f.train.size() + f.test.size() == pairs.size());
      for (const auto& p : f.test) {
        CHECK(all_test.insert({p.u, p.v}).second);  // disjoint folds
        for (const auto& tr : f.train) CHECK_FALSE(same_pair(p, tr));
      }
    }
    CHECK(sizes == std::multiset<int>{3, 2, 2, 2, 2});
    CHECK(all_test.size() == pairs.size());  // union covers everything
  }

  TEST_CASE("kfold: 10 pairs over 5 folds gives even splits") {
    std::vector<LabeledPair> pairs;
    for (EntityId i = 0; i < 10; ++i) pairs.push_back({i, static_cast<EntityId>(i + 100), 1});
    auto folds = kfold_split(pairs, 5, 17);
    for (const auto& f : folds) CHECK(f.test.size() == 2);
  }

  TEST_CASE("kfold: k < 2 is a config error") {
    std::vector<LabeledPair> pairs = {{0, 1, 1}, {1, 2, 0}};
    CHECK_THROWS_AS(kfold_split(pairs, 1, 5), Error);
  }

  TEST_CASE("feature overrides replace rows and reject bad widths") {
    auto path = temp_path("dgib_feat.tsv");
    write_file_atomic(path, "a\t1.0,2.0,3.0,4.0\n");
    TripleSet kg;
    EntityId a = kg.entities.intern("a");
    kg.entities.intern("b");
    RelationId r = kg.relations.intern("r");
    kg.triples = {{a, r, 1}};
    kg.kg_entity_count = 2;
    auto g = build_joint_graph(kg, {}, 4, 3, 5, path);
    CHECK(g.node_features(0, 0) == 1.0);
    CHECK(g.node_features(0, 3) == 4.0);

    write_file_atomic(path, "a\t1.0,2.0\n");
    CHECK_THROWS_AS(build_joint_graph(kg, {}, 4, 3, 5, std::optional<std::string>(path)), Error);
  }
}
