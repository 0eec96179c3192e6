// dgib: train, predict, explain and evaluate diverse bottleneck-subgraph
// models for gene-pair link prediction on a knowledge graph.

#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dgib/config.hpp"
#include "dgib/graph_store.hpp"
#include "dgib/io.hpp"
#include "dgib/krange.hpp"
#include "dgib/metrics.hpp"
#include "dgib/model.hpp"
#include "dgib/rng.hpp"
#include "dgib/motifs.hpp"
#include "dgib/selfcheck.hpp"
#include "dgib/synth.hpp"
#include "dgib/types.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace dgib;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return 2;
    case ErrorCode::config: return 3;
    case ErrorCode::shape: return 4;
    case ErrorCode::domain: return 4;
    case ErrorCode::parse: return 5;
    case ErrorCode::data: return 5;
    case ErrorCode::numeric: return 6;
  }
  return 1;
}

RunConfig load_run_config(const std::string& config_path, std::uint64_t seed, bool seed_set) {
  RunConfig cfg = config_path.empty() ? RunConfig() : load_config(config_path);
  if (seed_set) cfg.seed = seed;
  cfg.validate();
  return cfg;
}

std::string pair_key_name(const std::string& a, const std::string& b) {
  return a < b ? a + "\t" + b : b + "\t" + a;
}

struct LoadedData {
  TripleSet kg;
  std::vector<LabeledPair> pairs;
};

LoadedData load_inputs(const std::string& kg_path, const std::string& pairs_path) {
  LoadedData d;
  d.kg = load_triples(kg_path);
  d.pairs = load_pairs(pairs_path, d.kg.entities);
  return d;
}

std::string folds_to_tsv(const std::vector<FoldSplit>& folds, const Vocab& entities) {
  std::ostringstream out;
  out << "fold\trole\tgene_a\tgene_b\tlabel\n";
  for (const auto& f : folds) {
    for (const auto& p : f.train) {
      out << f.fold << "\ttrain\t" << entities.name(p.u) << '\t' << entities.name(p.v) << '\t'
          << p.label << '\n';
    }
    for (const auto& p : f.test) {
      out << f.fold << "\ttest\t" << entities.name(p.u) << '\t' << entities.name(p.v) << '\t'
          << p.label << '\n';
    }
  }
  return out.str();
}

struct FoldFile {
  std::map<int, std::pair<std::vector<LabeledPair>, std::vector<LabeledPair>>> folds;
};

FoldFile read_folds(const std::string& path, Vocab& entities) {
  FoldFile out;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || lineno == 1) continue;  // header
    auto fields = split(line, '\t');
    if (fields.size() != 5) {
      fail(ErrorCode::parse, path + ": line " + std::to_string(lineno) + ": expected 5 fields");
    }
    int fold = std::stoi(fields[0]);
    LabeledPair p{entities.intern(fields[2]), entities.intern(fields[3]),
                  fields[4] == "1" ? 1 : 0};
    if (fields[1] == "train") {
      out.folds[fold].first.push_back(p);
    } else if (fields[1] == "test") {
      out.folds[fold].second.push_back(p);
    } else {
      fail(ErrorCode::parse, path + ": line " + std::to_string(lineno) + ": bad role " + fields[1]);
    }
  }
  return out;
}

std::string loss_log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream out;
  out << "epoch,split,ce,kl,dpp,total\n";
  for (const auto& row : log) {
    out << row.epoch << ',' << row.split << ',' << format_double(row.mean.ce) << ','
        << format_double(row.mean.kl) << ',' << format_double(row.mean.dpp) << ','
        << format_double(row.mean.total) << '\n';
  }
  return out.str();
}

int cmd_synth(const PlantSpec& spec, const std::string& out_dir) {
  auto data = generate(spec);
  write_file_atomic(out_dir + "/kg.tsv", synth_kg_tsv(data));
  write_file_atomic(out_dir + "/pairs.tsv", synth_pairs_tsv(data));
  write_file_atomic(out_dir + "/features.tsv", synth_features_tsv(data));
  write_file_atomic(out_dir + "/ground_truth.json", synth_ground_truth_json(data));
  std::cout << "synth: " << data.kg_triples.size() << " triples, " << data.pairs.size()
            << " pairs -> " << out_dir << "\n";
  return 0;
}

int cmd_ingest(const std::string& kg_path, const std::string& pairs_path,
               const std::string& config_path, const std::string& out_path) {
  RunConfig cfg = load_run_config(config_path, 0, false);
  auto data = load_inputs(kg_path, pairs_path);
  auto g = build_joint_graph(data.kg, data.pairs, cfg.d0, cfg.d1, cfg.seed);
  nlohmann::json stats = {
      {"entities", g.entities.size()},
      {"relations", g.relations.size()},
      {"kg_triples", data.kg.triples.size()},
      {"pairs", data.pairs.size()},
      {"sl_edges", g.sl_pairs.size()},
      {"edges_total", g.edge_count},
  };
  if (out_path.empty()) {
    std::cout << stats.dump(2) << "\n";
  } else {
    write_file_atomic(out_path, stats.dump(2) + "\n");
  }
  return 0;
}

int cmd_split(const std::string& pairs_path, int k, std::uint64_t seed, const std::string& out_path) {
  Vocab entities;
  auto pairs = load_pairs(pairs_path, entities);
  auto folds = kfold_split(pairs, k, seed);
  write_file_atomic(out_path, folds_to_tsv(folds, entities));
  std::cout << "split: " << pairs.size() << " pairs into " << k << " folds -> " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& kg_path, const std::string& pairs_path,
              const std::string& features_path, const std::string& folds_path, int fold,
              const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& out_dir) {
  RunConfig cfg = load_run_config(config_path, seed, seed_set);
  auto data = load_inputs(kg_path, pairs_path);

  std::vector<LabeledPair> train_pairs = data.pairs;
  std::vector<LabeledPair> test_pairs;
  if (!folds_path.empty()) {
    auto folds = read_folds(folds_path, data.kg.entities);
    auto it = folds.folds.find(fold);
    if (it == folds.folds.end()) fail(ErrorCode::config, "fold " + std::to_string(fold) + " not in folds file");
    train_pairs = it->second.first;
    test_pairs = it->second.second;
  }

  std::vector<LabeledPair> train_positives;
  for (const auto& p : train_pairs) {
    if (p.label == 1) train_positives.push_back(p);
  }
  auto g = build_joint_graph(data.kg, train_positives, cfg.d0, cfg.d1, cfg.seed,
                             features_path.empty() ? std::nullopt
                                                   : std::optional<std::string>(features_path));
  auto out = train_model(g, train_pairs, test_pairs, cfg);
  save_checkpoint(out.state, out_dir + "/model.ckpt");
  write_file_atomic(out_dir + "/train_log.csv", loss_log_csv(out.log));
  std::cout << "train: " << train_pairs.size() << " pairs, " << cfg.epochs << " epochs -> "
            << out_dir << "/model.ckpt\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& kg_path,
                const std::string& pairs_path, const std::string& out_path) {
  auto state = load_checkpoint(model_path);
  auto g = rebuild_joint_graph(state, kg_path);
  Vocab probe = g.entities;  // lookups only; unknown names must error, not intern
  std::istringstream in(read_file(pairs_path));
  std::string line;
  std::ostringstream out;
  int lineno = 0;
  std::vector<std::pair<EntityId, EntityId>> queries;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) {
      fail(ErrorCode::parse, pairs_path + ": line " + std::to_string(lineno) + ": expected at least 2 fields");
    }
    auto u = probe.lookup(fields[0]);
    auto v = probe.lookup(fields[1]);
    if (u < 0) fail(ErrorCode::data, "unknown entity '" + fields[0] + "'");
    if (v < 0) fail(ErrorCode::data, "unknown entity '" + fields[1] + "'");
    queries.emplace_back(u, v);
  }
  std::vector<double> scores(queries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(queries.size()); ++i) {
    scores[static_cast<std::size_t>(i)] = predict_pair(
        state, g, queries[static_cast<std::size_t>(i)].first, queries[static_cast<std::size_t>(i)].second);
  }
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out << g.entities.name(queries[i].first) << '\t' << g.entities.name(queries[i].second) << '\t'
        << format_double(scores[i]) << '\n';
  }
  write_file_atomic(out_path, out.str());
  std::cout << "predict: " << queries.size() << " pairs -> " << out_path << "\n";
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& kg_path,
                const std::string& pairs_path, const std::string& out_path,
                const std::vector<double>& thresholds, const std::string& metrics_out) {
  auto state = load_checkpoint(model_path);
  auto g = rebuild_joint_graph(state, kg_path);
  Vocab probe = g.entities;

  std::istringstream in(read_file(pairs_path));
  std::string line;
  std::vector<std::pair<EntityId, EntityId>> queries;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) {
      fail(ErrorCode::parse, pairs_path + ": line " + std::to_string(lineno) + ": expected at least 2 fields");
    }
    auto u = probe.lookup(fields[0]);
    auto v = probe.lookup(fields[1]);
    if (u < 0) fail(ErrorCode::data, "unknown entity '" + fields[0] + "'");
    if (v < 0) fail(ErrorCode::data, "unknown entity '" + fields[1] + "'");
    queries.emplace_back(u, v);
  }

  write_file_atomic(out_path, explanation_json(state, g, queries, thresholds));

  if (!metrics_out.empty()) {
    std::ostringstream metrics_csv;
    metrics_csv << "gene_a,gene_b,infidelity,sparseness,dpp\n";
    for (const auto& [u, v] : queries) {
      auto ctx = build_pair_context(g, {u, v, 0}, state.cfg);
      auto res = explain_ctx(state, ctx, thresholds);
      double infid_sum = 0.0, sparse_sum = 0.0;
      int counted = 0;
      for (const auto& pk : res.per_k) {
        if (pk.scores.size() == 0) continue;
        Vec baseline = pk.scores;
        auto model_fn = [&state, &ctx, &pk](const Vec& gates) {
          return predict_with_gates(state, ctx, pk.k, gates);
        };
        infid_sum += infidelity(model_fn, baseline, baseline, state.cfg.infidelity_sigma,
                                state.cfg.infidelity_draws, state.cfg.seed);
        std::vector<double> wv(baseline.data(), baseline.data() + baseline.size());
        sparse_sum += sparseness(wv);
        ++counted;
      }
      if (counted > 0) {
        metrics_csv << g.entities.name(u) << ',' << g.entities.name(v) << ','
                    << format_double(infid_sum / counted) << ','
                    << format_double(sparse_sum / counted) << ',' << format_double(res.dpp) << '\n';
      }
    }
    write_file_atomic(metrics_out, metrics_csv.str());
  }
  std::cout << "explain: " << queries.size() << " pairs -> " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& pairs_path,
             const std::vector<int>& cutoffs, int fold, const std::string& out_path) {
  Vocab entities;
  auto pairs = load_pairs(pairs_path, entities);

  std::map<std::pair<EntityId, EntityId>, double> conf;
  std::istringstream in(read_file(pred_path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      fail(ErrorCode::parse, pred_path + ": line " + std::to_string(lineno) + ": expected 3 fields");
    }
    auto u = entities.lookup(fields[0]);
    auto v = entities.lookup(fields[1]);
    if (u < 0 || v < 0) continue;  // prediction for a pair outside this split
    conf[{std::min(u, v), std::max(u, v)}] = std::stod(fields[2]);
  }

  std::ostringstream out;
  out << "metric,cutoff,fold,value\n";
  for (int c : cutoffs) {
    auto tasks = build_ranking_tasks(pairs, conf, c);
    if (tasks.empty()) fail(ErrorCode::data, "no rankable queries in the evaluation split");
    double ndcg = 0.0, prec = 0.0, rec = 0.0;
    for (const auto& t : tasks) {
      ndcg += ndcg_at(t);
      auto [p, r] = precision_recall_at(t);
      prec += p;
      rec += r;
    }
    double n = static_cast<double>(tasks.size());
    out << "ndcg," << c << ',' << fold << ',' << format_double(ndcg / n) << '\n';
    out << "precision," << c << ',' << fold << ',' << format_double(prec / n) << '\n';
    out << "recall," << c << ',' << fold << ',' << format_double(rec / n) << '\n';
    out << "map," << c << ',' << fold << ',' << format_double(map_at(tasks)) << '\n';
  }
  write_file_atomic(out_path, out.str());
  std::cout << "eval -> " << out_path << "\n";
  return 0;
}

int cmd_krange(const std::string& kg_path, const std::string& pairs_path,
               const std::string& config_path, const std::string& out_path,
               const std::string& hist_path) {
  RunConfig cfg = load_run_config(config_path, 0, false);
  auto data = load_inputs(kg_path, pairs_path);
  std::vector<LabeledPair> positives;
  for (const auto& p : data.pairs) {
    if (p.label == 1) positives.push_back(p);
  }
  auto g = build_joint_graph(data.kg, positives, cfg.d0, cfg.d1, cfg.seed);

  std::vector<int> counts(data.pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(data.pairs.size()); ++i) {
    const auto& p = data.pairs[static_cast<std::size_t>(i)];
    auto eg = extract_enclosing(g, p.u, p.v, cfg.t_hops);
    counts[static_cast<std::size_t>(i)] = estimate_core_count(eg).component_count;
  }

  std::ostringstream out;
  out << "gene_a,gene_b,component_count\n";
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    out << g.entities.name(data.pairs[i].u) << ',' << g.entities.name(data.pairs[i].v) << ','
        << counts[i] << '\n';
  }
  write_file_atomic(out_path, out.str());

  auto summary = krange_histogram(counts);
  std::ostringstream hist;
  hist << "component_count,frequency\n";
  for (const auto& [count, freq] : summary.histogram) hist << count << ',' << freq << '\n';
  write_file_atomic(hist_path, hist.str());
  std::cout << "krange: K in [" << summary.k_min << ", " << summary.k_max << "] -> " << out_path
            << "\n";
  return 0;
}

int cmd_census(const std::string& graph_path, const std::string& out_path) {
  std::istringstream in(read_file(graph_path));
  std::string line;
  Vocab nodes;
  std::vector<std::pair<int, int>> arcs;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() == 2) {
      arcs.emplace_back(nodes.intern(fields[0]), nodes.intern(fields[1]));
    } else if (fields.size() == 3) {
      arcs.emplace_back(nodes.intern(fields[0]), nodes.intern(fields[2]));
    } else {
      fail(ErrorCode::parse, graph_path + ": line " + std::to_string(lineno) +
                                 ": expected head<TAB>tail or head<TAB>relation<TAB>tail");
    }
  }
  auto g = make_digraph(nodes.size(), arcs);
  auto counts = census_counts(g);
  std::ostringstream out;
  out << "motif_index,count\n";
  for (int i = 0; i < kMotifCount; ++i) out << (i + 1) << ',' << counts[static_cast<std::size_t>(i)] << '\n';
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_file_atomic(out_path, out.str());
  }
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  auto report = [&failures](bool ok, const std::string& name) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };

  {  // motif kernels against the exhaustive oracle
    bool ok = true;
    Rng rng(20250);
    for (int rep = 0; rep < 40 && ok; ++rep) {
      int n = 3 + static_cast<int>(rng.below(8));
      double p = rng.uniform(0.1, 0.5);
      std::vector<std::pair<int, int>> arcs;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j && rng.uniform() < p) arcs.emplace_back(i, j);
      auto g = make_digraph(n, arcs);
      for (int m = 1; m <= kMotifCount && ok; ++m) {
        ok = motif_adjacency(g, m) == motif_adjacency_oracle(g, m);
      }
    }
    report(ok, "motif-oracle-equivalence (40 random graphs)");
  }

  {  // gradient check on a few random instances
    bool ok = true;
    for (int rep = 0; rep < 3 && ok; ++rep) {
      RunConfig cfg;
      cfg.K = 2;
      cfg.d0 = 4;
      cfg.d1 = 3;
      cfg.d2 = 4;
      cfg.d3 = 6;
      cfg.d4 = 4;
      cfg.gin_hidden = 5;
      cfg.cls_hidden = 4;
      cfg.seed = static_cast<std::uint64_t>(rep);
      auto inst = random_instance(6, 3, 0.4, cfg.d0, cfg.d1, static_cast<std::uint64_t>(900 + rep));
      auto state = init_model(inst.graph, cfg);
      auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
      auto rep_out = check_model_gradients(state, ctx, rep % 2, cfg, 1234 + static_cast<std::uint64_t>(rep));
      ok = rep_out.max_rel_err < 1e-4;
    }
    report(ok, "full-chain-gradient-check (3 instances)");
  }

  {  // KL identities
    bool ok = std::abs(gaussian_kl(Vec::Zero(6), Vec::Ones(6))) < 1e-12;
    Vec mu(2);
    mu << 1.0, 0.0;
    ok = ok && std::abs(gaussian_kl(mu, Vec::Ones(2)) - 0.5) < 1e-12;
    Vec mu2 = Vec::Zero(2), sig2(2);
    sig2 << 2.0, 1.0;
    ok = ok && std::abs(gaussian_kl(mu2, sig2) -
                        gaussian_kl_monte_carlo(mu2, sig2, 400000, 31)) < 1e-2;
    report(ok, "gaussian-kl-identities");
  }

  {  // relaxation identity
    Vec b(3);
    b << 0.2, 0.5, 0.9;
    Vec eps = Vec::Constant(3, 0.5);
    Vec relaxed = relax_sample(b, eps, 1.0);
    bool ok = (relaxed - b).cwiseAbs().maxCoeff() < 1e-12;
    report(ok, "concrete-relaxation-identity");
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diverse bottleneck-subgraph prediction on knowledge graphs"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-mechanism dataset");
  PlantSpec spec;
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed")->required();
  synth->add_option("--entities", spec.entities, "entity budget");
  synth->add_option("--genes", spec.genes, "gene pool size");
  synth->add_option("--pairs", spec.pairs, "number of labeled pairs");
  synth->add_option("--relations", spec.relations, "relation vocabulary size");
  synth->add_option("--templates", spec.templates_per_positive, "gadgets per positive pair (1..3)");
  synth->add_option("--filler", spec.filler_per_pair, "distractor halo size per pair");
  synth->add_option("--background", spec.background_prob, "background density in [0,1]");
  synth->add_option("--d0", spec.feature_dim, "feature width for features.tsv");
  synth->add_option("--aux-pool", spec.aux_pool, "shared gadget-node pool size (0 = 6 * genes)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "load and validate kg + pairs, emit stats");
  std::string in_kg, in_pairs, in_config, in_out;
  ingest->add_option("--kg", in_kg, "kg.tsv")->required();
  ingest->add_option("--pairs", in_pairs, "pairs.tsv")->required();
  ingest->add_option("--config", in_config, "config file");
  ingest->add_option("--out", in_out, "stats JSON path (stdout when omitted)");

  // split
  auto* split_cmd = app.add_subcommand("split", "k-fold split of the pair set");
  std::string sp_pairs, sp_out;
  int sp_k = 5;
  std::uint64_t sp_seed = 0;
  split_cmd->add_option("--pairs", sp_pairs, "pairs.tsv")->required();
  split_cmd->add_option("--k", sp_k, "fold count");
  split_cmd->add_option("--seed", sp_seed, "shuffle seed")->required();
  split_cmd->add_option("--out", sp_out, "folds.tsv path")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string tr_kg, tr_pairs, tr_features, tr_folds, tr_config, tr_out;
  int tr_fold = 0;
  std::uint64_t tr_seed = 0;
  bool tr_seed_set = false;
  train_cmd->add_option("--kg", tr_kg, "kg.tsv")->required();
  train_cmd->add_option("--pairs", tr_pairs, "pairs.tsv")->required();
  train_cmd->add_option("--features", tr_features, "features.tsv override");
  train_cmd->add_option("--folds", tr_folds, "folds.tsv from `split`");
  train_cmd->add_option("--fold", tr_fold, "fold index to train");
  train_cmd->add_option("--config", tr_config, "config file");
  train_cmd->add_option("--seed", tr_seed, "training seed")->required()
      ->each([&tr_seed_set](const std::string&) { tr_seed_set = true; });
  train_cmd->add_option("--out", tr_out, "output directory")->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "score pairs with a trained model");
  std::string pr_model, pr_kg, pr_pairs, pr_out;
  predict_cmd->add_option("--model", pr_model, "model.ckpt")->required();
  predict_cmd->add_option("--kg", pr_kg, "kg.tsv")->required();
  predict_cmd->add_option("--pairs", pr_pairs, "pairs.tsv")->required();
  predict_cmd->add_option("--out", pr_out, "predictions.tsv")->required();

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "emit K explanation subgraphs per pair");
  std::string ex_model, ex_kg, ex_pairs, ex_out, ex_metrics;
  std::vector<double> ex_thresholds;
  explain_cmd->add_option("--model", ex_model, "model.ckpt")->required();
  explain_cmd->add_option("--kg", ex_kg, "kg.tsv")->required();
  explain_cmd->add_option("--pairs", ex_pairs, "pairs.tsv")->required();
  explain_cmd->add_option("--out", ex_out, "explanations.json")->required();
  explain_cmd->add_option("--thresholds", ex_thresholds, "per-k custom thresholds")->delimiter(',');
  explain_cmd->add_option("--metrics-out", ex_metrics, "explanation metrics CSV");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "ranking metrics from predictions");
  std::string ev_pred, ev_pairs, ev_out;
  std::vector<int> ev_cutoffs = {10, 50};
  int ev_fold = 0;
  eval_cmd->add_option("--pred", ev_pred, "predictions.tsv")->required();
  eval_cmd->add_option("--pairs", ev_pairs, "labeled pairs.tsv of the split")->required();
  eval_cmd->add_option("--cutoffs", ev_cutoffs, "cutoff list")->delimiter(',');
  eval_cmd->add_option("--fold", ev_fold, "fold label for the CSV");
  eval_cmd->add_option("--out", ev_out, "metrics.csv")->required();

  // krange
  auto* krange_cmd = app.add_subcommand("krange", "estimate per-pair core-subgraph counts");
  std::string kr_kg, kr_pairs, kr_config, kr_out, kr_hist;
  krange_cmd->add_option("--kg", kr_kg, "kg.tsv")->required();
  krange_cmd->add_option("--pairs", kr_pairs, "pairs.tsv")->required();
  krange_cmd->add_option("--config", kr_config, "config file");
  krange_cmd->add_option("--out", kr_out, "per-pair CSV")->required();
  krange_cmd->add_option("--histogram-out", kr_hist, "histogram CSV")->required();

  // census
  auto* census_cmd = app.add_subcommand("census", "13-motif count totals of an edge list");
  std::string ce_graph, ce_out;
  census_cmd->add_option("--graph", ce_graph, "edge-list file")->required();
  census_cmd->add_option("--out", ce_out, "census CSV (stdout when omitted)");

  // selftest
  auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in oracle suite");

  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (0 = default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error code=config msg=\"" << e.what() << "\"\n";
    return 3;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    if (*synth) {
      spec.seed = synth_seed;
      return cmd_synth(spec, synth_out);
    }
    if (*ingest) return cmd_ingest(in_kg, in_pairs, in_config, in_out);
    if (*split_cmd) return cmd_split(sp_pairs, sp_k, sp_seed, sp_out);
    if (*train_cmd) return cmd_train(tr_kg, tr_pairs, tr_features, tr_folds, tr_fold, tr_config,
                                     tr_seed, true, tr_out);
    if (*predict_cmd) return cmd_predict(pr_model, pr_kg, pr_pairs, pr_out);
    if (*explain_cmd) return cmd_explain(ex_model, ex_kg, ex_pairs, ex_out, ex_thresholds, ex_metrics);
    if (*eval_cmd) return cmd_eval(ev_pred, ev_pairs, ev_cutoffs, ev_fold, ev_out);
    if (*krange_cmd) return cmd_krange(kr_kg, kr_pairs, kr_config, kr_out, kr_hist);
    if (*census_cmd) return cmd_census(ce_graph, ce_out);
    if (*selftest_cmd) return cmd_selftest();
  } catch (const Error& e) {
    std::cerr << "error code=" << error_code_name(e.code()) << " msg=\"" << e.what() << "\"\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error code=internal msg=\"" << e.what() << "\"\n";
    return 1;
  }
  return 0;
}
