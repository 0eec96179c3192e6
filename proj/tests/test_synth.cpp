#include <set>

#include "dgib/graph_store.hpp"
#include "dgib/krange.hpp"
#include "dgib/model.hpp"
#include "dgib/synth.hpp"
#include "doctest.h"

using namespace dgib;

namespace {

PlantSpec small_spec() {
  PlantSpec spec;
  spec.entities = 2000;
  spec.genes = 24;
  spec.pairs = 40;
  spec.relations = 6;
  spec.templates_per_positive = 2;
  spec.filler_per_pair = 8;
  spec.background_prob = 0.25;
  spec.feature_dim = 8;
  spec.seed = 5;
  return spec;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("zero background probability leaves exactly the planted templates") {
    auto spec = small_spec();
    spec.background_prob = 0.0;
    auto data = generate(spec);
    std::multiset<std::array<std::string, 3>> kg(data.kg_triples.begin(), data.kg_triples.end());
    std::multiset<std::array<std::string, 3>> planted;
    for (const auto& gt : data.ground_truth) {
      for (const auto& e : gt.planted_edges) planted.insert(e);
    }
    CHECK(kg == planted);
  }

  TEST_CASE("generation is deterministic per seed") {
    auto a = generate(small_spec());
    auto b = generate(small_spec());
    CHECK(a.kg_triples == b.kg_triples);
    CHECK(a.pairs == b.pairs);
    CHECK(a.features == b.features);
  }

  TEST_CASE("labels follow the planted-template rule exactly") {
    auto data = generate(small_spec());
    REQUIRE(data.ground_truth.size() == data.pairs.size());
    for (std::size_t i = 0; i < data.pairs.size(); ++i) {
      const auto& gt = data.ground_truth[i];
      CHECK(gt.label == data.pairs[i].second);
      CHECK((gt.label == 1) == !gt.planted_edges.empty());
      CHECK((gt.label == 1) == (gt.core_count > 0));
    }
  }

  TEST_CASE("balanced labels and distinct pairs") {
    auto data = generate(small_spec());
    int pos = 0;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [pair, label] : data.pairs) {
      pos += label;
      auto key = std::minmax(pair[0], pair[1]);
      CHECK(seen.insert(key).second);
    }
    CHECK(pos == 20);
  }

  TEST_CASE("planted edges are inside the pair's t=2 enclosing graph") {
    auto spec = small_spec();
    auto data = generate(spec);

    TripleSet kg;
    for (const auto& [h, r, t] : data.kg_triples) {
      kg.triples.push_back({kg.entities.intern(h), kg.relations.intern(r), kg.entities.intern(t)});
    }
    kg.kg_entity_count = kg.entities.size();
    std::vector<LabeledPair> sl;
    for (const auto& [pair, label] : data.pairs) {
      sl.push_back({kg.entities.intern(pair[0]), kg.entities.intern(pair[1]), label});
    }
    auto g = build_joint_graph(kg, sl, 4, 3, 1);

    for (std::size_t i = 0; i < data.ground_truth.size(); ++i) {
      const auto& gt = data.ground_truth[i];
      if (gt.label == 0) continue;
      auto eg = extract_enclosing(g, g.entities.lookup(gt.u), g.entities.lookup(gt.v), 2);
      std::set<std::tuple<int, int, int>> present;
      for (const auto& e : eg.edges) {
        present.insert({eg.nodes[static_cast<std::size_t>(e.head)], e.relation,
                        eg.nodes[static_cast<std::size_t>(e.tail)]});
      }
      for (const auto& pe : gt.planted_edges) {
        auto h = g.entities.lookup(pe[0]);
        auto r = g.relations.lookup(pe[1]);
        auto t = g.entities.lookup(pe[2]);
        CHECK(present.count({h, r, t}) == 1);
      }
    }
  }

  TEST_CASE("two disjoint templates are recovered by the core-count heuristic") {
    auto spec = small_spec();
    spec.pairs = 60;
    spec.genes = 30;
    auto data = generate(spec);

    TripleSet kg;
    for (const auto& [h, r, t] : data.kg_triples) {
      kg.triples.push_back({kg.entities.intern(h), kg.relations.intern(r), kg.entities.intern(t)});
    }
    kg.kg_entity_count = kg.entities.size();
    std::vector<LabeledPair> sl;
    for (const auto& [pair, label] : data.pairs) {
      sl.push_back({kg.entities.intern(pair[0]), kg.entities.intern(pair[1]), label});
    }
    auto g = build_joint_graph(kg, sl, 4, 3, 1);

    int hits = 0, total = 0;
    for (const auto& gt : data.ground_truth) {
      if (gt.core_count != 2) continue;
      auto eg = extract_enclosing(g, g.entities.lookup(gt.u), g.entities.lookup(gt.v), 2);
      auto est = estimate_core_count(eg);
      ++total;
      if (est.component_count >= 2) ++hits;
    }
    REQUIRE(total > 0);
    CHECK(static_cast<double>(hits) >= 0.8 * static_cast<double>(total));
  }

  TEST_CASE("infeasible entity budget is rejected") {
    auto spec = small_spec();
    spec.entities = 30;
    CHECK_THROWS_AS(generate(spec), Error);
  }

  TEST_CASE("emitted files parse through the standard loaders") {
    auto data = generate(small_spec());
    auto kg_text = synth_kg_tsv(data);
    auto pairs_text = synth_pairs_tsv(data);
    CHECK(kg_text.find('\t') != std::string::npos);
    CHECK(pairs_text.find('\t') != std::string::npos);
    auto features_text = synth_features_tsv(data);
    CHECK(features_text.find(',') != std::string::npos);
    auto gt = synth_ground_truth_json(data);
    CHECK(gt.find("planted_edges") != std::string::npos);
  }
}
