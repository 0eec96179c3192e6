#include "dgib/synth.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "dgib/graph_store.hpp"
#include "dgib/io.hpp"
#include "dgib/rng.hpp"
#include "dgib/types.hpp"

#include "json.hpp"

namespace dgib {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Gadget shapes, 2-3 aux nodes each, drawn from a shared aux pool. Two
// constraints keep the construction well-behaved: u and v only point INTO
// the gadget (their PageRank stays low, so disjoint gadgets stay separable
// components), and no aux node is adjacent to both u and v (so a pool node
// reused by another pair never drags that pair's genes into this pair's
// enclosing graph).
// Arcs reference slots: 0 = u, 1 = v, 2.. = aux.
struct TemplateShape {
  int aux = 0;
  std::vector<std::pair<int, int>> arcs;
};

const std::vector<TemplateShape>& template_shapes() {
  static const std::vector<TemplateShape> shapes = {
      // cycle: u->a, v->b, a->b->c->a
      {3, {{0, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 2}}},
      // mutual pair: u->a, v->b, a<->b
      {2, {{0, 2}, {1, 3}, {2, 3}, {3, 2}}},
      // mutual fan-in: u->a, v->b, a<->b, a->c, b->c
      {3, {{0, 2}, {1, 3}, {2, 3}, {3, 2}, {2, 4}, {3, 4}}},
  };
  return shapes;
}

}  // namespace

SynthData generate(const PlantSpec& spec) {
  if (spec.genes < 4) fail(ErrorCode::config, "need at least 4 genes");
  if (spec.pairs < 2) fail(ErrorCode::config, "need at least 2 pairs");
  if (spec.relations < 2) fail(ErrorCode::config, "need at least 2 relations");
  if (spec.templates_per_positive < 1 || spec.templates_per_positive > 3) {
    fail(ErrorCode::config, "templates_per_positive must be in 1..3");
  }
  if (spec.background_prob < 0.0 || spec.background_prob > 1.0) {
    fail(ErrorCode::config, "background_prob must be in [0,1]");
  }
  if (spec.feature_dim < 1) fail(ErrorCode::config, "feature_dim must be >= 1");
  std::size_t universe = static_cast<std::size_t>(spec.genes) *
                         static_cast<std::size_t>(spec.genes - 1) / 2;
  if (universe < static_cast<std::size_t>(spec.pairs)) {
    fail(ErrorCode::config, "gene pool too small for the requested pair count");
  }

  int n_pos = spec.pairs / 2;
  int n_neg = spec.pairs - n_pos;
  int filler = spec.background_prob > 0.0 ? spec.filler_per_pair : 0;
  // large enough that two gadgets of one pair rarely both touch an aux pair
  // some other pair wired together, small enough that aux recur across folds
  int aux_pool = spec.aux_pool > 0 ? spec.aux_pool : std::max(12, 6 * spec.genes);
  if (aux_pool < 4) fail(ErrorCode::config, "aux pool too small for a gadget");
  long needed = spec.genes + aux_pool + static_cast<long>(spec.pairs) * filler;
  if (needed > spec.entities) {
    fail(ErrorCode::config, "entity budget " + std::to_string(spec.entities) +
                                " too small; this spec needs up to " + std::to_string(needed));
  }

  Rng rng(mix_seed(spec.seed, 0x5e9d));
  SynthData data;

  std::vector<std::string> genes;
  genes.reserve(static_cast<std::size_t>(spec.genes));
  for (int i = 0; i < spec.genes; ++i) genes.push_back("g" + std::to_string(i));

  int n_core_rel = std::max(1, spec.relations / 2);
  std::vector<std::string> relations;
  for (int i = 0; i < spec.relations; ++i) relations.push_back("r" + std::to_string(i));
  auto core_rel = [&]() { return relations[rng.below(static_cast<std::uint64_t>(n_core_rel))]; };
  auto scaffold_rel = [&]() {
    return relations[static_cast<std::size_t>(n_core_rel) +
                     rng.below(static_cast<std::uint64_t>(spec.relations - n_core_rel))];
  };

  // positive pair sample (distinct unordered pairs)
  std::set<std::pair<int, int>> pos_set;
  while (static_cast<int>(pos_set.size()) < n_pos) {
    int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.genes)));
    int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.genes)));
    if (a == b) continue;
    pos_set.insert({std::min(a, b), std::max(a, b)});
  }
  std::vector<std::pair<int, int>> positives(pos_set.begin(), pos_set.end());

  // negatives via the shared sampler, on integer gene ids
  std::vector<LabeledPair> pos_pairs;
  std::vector<EntityId> gene_ids;
  for (int i = 0; i < spec.genes; ++i) gene_ids.push_back(i);
  for (const auto& [a, b] : positives) pos_pairs.push_back({a, b, 1});
  auto negatives = sample_negatives(pos_pairs, gene_ids, static_cast<std::size_t>(n_neg),
                                    mix_seed(spec.seed, 0x9e6));

  // aux entities form a shared pool so the same pathway nodes recur across
  // pairs, in both training and held-out splits
  std::vector<std::string> aux_names_pool;
  for (int i = 0; i < aux_pool; ++i) aux_names_pool.push_back("x" + std::to_string(i));
  int filler_counter = 0;
  auto new_filler = [&]() { return "f" + std::to_string(filler_counter++); };

  std::set<std::string> aux_names, filler_names;

  auto add_triple = [&data](const std::string& h, const std::string& r, const std::string& t) {
    data.kg_triples.push_back({h, r, t});
  };

  auto plant_pair = [&](const std::string& u, const std::string& v, int label) {
    GroundTruthPair gt;
    gt.u = u;
    gt.v = v;
    gt.label = label;
    if (label == 1) {
      // same shape for every gadget of one pair keeps the gadgets' PageRank
      // profiles tied, so pruning keeps a piece of each
      const auto& shape =
          template_shapes()[rng.below(static_cast<std::uint64_t>(template_shapes().size()))];
      std::set<std::string> used;  // gadgets of one pair stay node-disjoint
      for (int t = 0; t < spec.templates_per_positive; ++t) {
        std::vector<std::string> slots = {u, v};
        for (int a = 0; a < shape.aux; ++a) {
          for (;;) {
            const auto& name = aux_names_pool[rng.below(static_cast<std::uint64_t>(aux_pool))];
            if (used.insert(name).second) {
              aux_names.insert(name);
              slots.push_back(name);
              break;
            }
          }
        }
        for (const auto& [from, to] : shape.arcs) {
          auto rel = core_rel();
          add_triple(slots[static_cast<std::size_t>(from)], rel, slots[static_cast<std::size_t>(to)]);
          gt.planted_edges.push_back({slots[static_cast<std::size_t>(from)], rel,
                                      slots[static_cast<std::size_t>(to)]});
        }
      }
      gt.core_count = spec.templates_per_positive;
    }
    // distractor halo; identical for both labels so it carries no signal
    if (filler > 0) {
      std::vector<std::string> halo;
      for (int f = 0; f < filler; ++f) {
        auto name = new_filler();
        filler_names.insert(name);
        halo.push_back(name);
        add_triple(u, scaffold_rel(), name);
        add_triple(v, scaffold_rel(), name);
      }
      for (std::size_t i = 0; i < halo.size(); ++i) {
        for (std::size_t j = i + 1; j < halo.size(); ++j) {
          if (rng.uniform() < spec.background_prob) add_triple(halo[i], scaffold_rel(), halo[j]);
        }
      }
    }
    data.ground_truth.push_back(std::move(gt));
  };

  for (const auto& [a, b] : positives) {
    data.pairs.push_back({{genes[static_cast<std::size_t>(a)], genes[static_cast<std::size_t>(b)]}, 1});
    plant_pair(genes[static_cast<std::size_t>(a)], genes[static_cast<std::size_t>(b)], 1);
  }
  for (const auto& p : negatives) {
    data.pairs.push_back({{genes[static_cast<std::size_t>(p.u)], genes[static_cast<std::size_t>(p.v)]}, 0});
    plant_pair(genes[static_cast<std::size_t>(p.u)], genes[static_cast<std::size_t>(p.v)], 0);
  }

  // light global noise between halo nodes only; noise incident to genes or to
  // shared gadget nodes acts as a 2-hop bridge and bloats every enclosing
  // graph around it
  if (spec.background_prob > 0.0 && !filler_names.empty()) {
    std::vector<std::string> pool(filler_names.begin(), filler_names.end());
    int n_noise = static_cast<int>(spec.background_prob * static_cast<double>(spec.pairs) / 2.0);
    for (int i = 0; i < n_noise; ++i) {
      const auto& a = pool[rng.below(static_cast<std::uint64_t>(pool.size()))];
      const auto& b = pool[rng.below(static_cast<std::uint64_t>(pool.size()))];
      if (a == b) continue;
      add_triple(a, scaffold_rel(), b);
    }
  }

  // role-prototype features with a small per-entity jitter; shared prototypes
  // are what let gate scores carry over to pairs never seen in training
  auto proto = [&rng, &spec]() {
    std::vector<double> row(static_cast<std::size_t>(spec.feature_dim));
    for (auto& x : row) x = rng.uniform(-0.5, 0.5);
    return row;
  };
  auto gene_proto = proto();
  auto aux_proto = proto();
  auto filler_proto = proto();
  auto emit_features = [&](const std::string& name, const std::vector<double>& base) {
    Rng jitter(mix_seed(spec.seed, 0x7e47, fnv1a(name)));
    std::vector<double> row = base;
    for (auto& x : row) x += jitter.uniform(-0.05, 0.05);
    data.features.emplace(name, std::move(row));
  };
  for (const auto& g : genes) emit_features(g, gene_proto);
  for (const auto& a : aux_names) emit_features(a, aux_proto);
  for (const auto& f : filler_names) emit_features(f, filler_proto);

  return data;
}

std::string synth_kg_tsv(const SynthData& data) {
  std::ostringstream out;
  for (const auto& [h, r, t] : data.kg_triples) out << h << '\t' << r << '\t' << t << '\n';
  return out.str();
}

std::string synth_pairs_tsv(const SynthData& data) {
  std::ostringstream out;
  for (const auto& [pair, label] : data.pairs) out << pair[0] << '\t' << pair[1] << '\t' << label << '\n';
  return out.str();
}

std::string synth_features_tsv(const SynthData& data) {
  std::ostringstream out;
  for (const auto& [name, row] : data.features) {
    out << name << '\t';
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
  return out.str();
}

std::string synth_ground_truth_json(const SynthData& data) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& gt : data.ground_truth) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : gt.planted_edges) edges.push_back({e[0], e[1], e[2]});
    arr.push_back({{"pair", {gt.u, gt.v}},
                   {"label", gt.label},
                   {"planted_edges", edges},
                   {"core_count", gt.core_count}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace dgib
