#include "dgib/selfcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dgib/rng.hpp"

namespace dgib {

std::vector<std::array<int, 3>> match_instances_oracle(const DirectedGraph& g, int motif_index) {
  const auto& motif = MotifCatalog::instance().motif(motif_index);
  std::vector<std::array<int, 3>> out;
  for (int a = 0; a < g.n; ++a) {
    for (int b = 0; b < g.n; ++b) {
      if (b == a) continue;
      for (int c = 0; c < g.n; ++c) {
        if (c == a || c == b) continue;
        const int v[3] = {a, b, c};
        bool match = true;
        for (int r = 0; r < 3 && match; ++r) {
          for (int s = 0; s < 3 && match; ++s) {
            if (r == s) continue;
            if ((g.arc(v[r], v[s]) ? 1 : 0) != motif.adj[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)]) {
              match = false;
            }
          }
        }
        if (match) out.push_back({a, b, c});
      }
    }
  }
  return out;
}

Mat motif_adjacency_oracle(const DirectedGraph& g, int motif_index) {
  Mat m = Mat::Zero(g.n, g.n);
  for (const auto& v : match_instances_oracle(g, motif_index)) {
    // I({j,l} subset set(V)) over all ordered entries
    const int pairs[3][2] = {{v[0], v[1]}, {v[0], v[2]}, {v[1], v[2]}};
    for (const auto& p : pairs) {
      m(p[0], p[1]) += 1.0;
      m(p[1], p[0]) += 1.0;
    }
  }
  return m;
}

double gaussian_kl_monte_carlo(const Vec& mu, const Vec& sigma, int n_samples, std::uint64_t seed) {
  // E_q[log q(z) - log p(z)] with q = N(mu, diag(sigma)), p = N(0, I); the
  // normalization constants reduce to the log-variance term.
  Rng rng(mix_seed(seed, 0x316c));
  double acc = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    double term = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      double eta = rng.normal();
      double z = mu[i] + std::sqrt(sigma[i]) * eta;
      // log q - log p per coordinate
      term += -0.5 * std::log(sigma[i]) - 0.5 * eta * eta + 0.5 * z * z;
    }
    acc += term;
  }
  return acc / static_cast<double>(n_samples);
}

RandomInstance random_instance(int n_nodes, int n_relations, double arc_prob, int d0, int d1,
                               std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7a3));
  RandomInstance inst;
  TripleSet kg;
  for (int i = 0; i < n_nodes; ++i) kg.entities.intern("n" + std::to_string(i));
  for (int r = 0; r < n_relations; ++r) kg.relations.intern("rel" + std::to_string(r));
  // simple digraph (at most one relation per ordered node pair) so the
  // parallel-arc max never ties during finite-difference checks
  for (int i = 0; i < n_nodes; ++i) {
    for (int j = 0; j < n_nodes; ++j) {
      if (i == j) continue;
      if (rng.uniform() < arc_prob) {
        kg.triples.push_back({i, static_cast<RelationId>(rng.below(static_cast<std::uint64_t>(n_relations))), j});
      }
    }
  }
  kg.kg_entity_count = kg.entities.size();
  // keep u's and v's neighborhoods overlapping: a couple of shared spokes
  kg.triples.push_back({0, 0, 2 % n_nodes});
  kg.triples.push_back({1, 0, 2 % n_nodes});
  if (n_nodes > 3) {
    kg.triples.push_back({0, 1 % n_relations, 3});
    kg.triples.push_back({1, 1 % n_relations, 3});
  }
  std::vector<LabeledPair> sl = {{0, 1, static_cast<int>(rng.below(2))}};
  inst.pair = sl[0];
  inst.graph = build_joint_graph(kg, sl, d0, d1, mix_seed(seed, 0xfea7));
  return inst;
}

namespace {

double loss_value(const ModelState& state, const PairContext& ctx, int label,
                  const RunConfig& cfg, std::uint64_t noise_seed) {
  Tape tape;
  auto fwd = model_forward(tape, state, ctx, Mode::train, noise_seed);
  auto loss = attach_loss(tape, fwd, label, cfg);
  return loss.total.value()(0, 0);
}

}  // namespace

FdReport check_model_gradients(const ModelState& state, const PairContext& ctx, int label,
                               const RunConfig& cfg, std::uint64_t noise_seed, double step) {
  // analytic gradients
  Tape tape;
  auto fwd = model_forward(tape, state, ctx, Mode::train, noise_seed);
  auto loss = attach_loss(tape, fwd, label, cfg);
  auto grad = backward_pair(tape, fwd, loss, ctx);

  ModelState probe = state;  // mutated entry by entry
  auto reg = param_registry(probe);

  FdReport report;
  auto record = [&report](double analytic, double numeric, const std::string& name) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    double rel = std::abs(analytic - numeric) / denom;
    if (std::abs(analytic) < 1e-9 && std::abs(numeric) < 1e-9) rel = 0.0;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_param = name;
    }
    ++report.checked;
  };

  // node features: only the pair's local rows can have nonzero gradient
  for (std::size_t local = 0; local < ctx.eg.nodes.size(); ++local) {
    EntityId global = ctx.eg.nodes[local];
    for (Eigen::Index j = 0; j < probe.node_features.cols(); ++j) {
      double saved = probe.node_features(global, j);
      probe.node_features(global, j) = saved + step;
      double up = loss_value(probe, ctx, label, cfg, noise_seed);
      probe.node_features(global, j) = saved - step;
      double down = loss_value(probe, ctx, label, cfg, noise_seed);
      probe.node_features(global, j) = saved;
      record(grad.x_local(static_cast<Eigen::Index>(local), j), (up - down) / (2.0 * step),
             "node_features");
    }
  }

  for (std::size_t p = 1; p < reg.size(); ++p) {
    Mat& mat = *reg[p].mat;
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      for (Eigen::Index j = 0; j < mat.cols(); ++j) {
        double saved = mat(i, j);
        mat(i, j) = saved + step;
        double up = loss_value(probe, ctx, label, cfg, noise_seed);
        mat(i, j) = saved - step;
        double down = loss_value(probe, ctx, label, cfg, noise_seed);
        mat(i, j) = saved;
        record(grad.params[p](i, j), (up - down) / (2.0 * step), reg[p].name);
      }
    }
  }
  return report;
}

}  // namespace dgib
