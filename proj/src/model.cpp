#include "dgib/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "dgib/io.hpp"
#include "dgib/rng.hpp"

#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dgib {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Uniform Glorot with a per-layer gain. The inner perceptrons need extra gain
// to compensate the tanh attenuation at the small fixed learning rate; the
// readout needs much less so the Gaussian means start near the prior and the
// determinant term cannot run away.
constexpr double kInnerGain = 2.0;
constexpr double kReadoutGain = 0.25;

Mat glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng, double gain = kInnerGain) {
  double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

Mlp2 alloc_mlp(int in, int hidden, int out) {
  Mlp2 m;
  m.w1 = Mat::Zero(in, hidden);
  m.b1 = Mat::Zero(1, hidden);
  m.w2 = Mat::Zero(hidden, out);
  m.b2 = Mat::Zero(1, out);
  return m;
}

void randomize_mlp(Mlp2& m, Rng& rng) {
  m.w1 = glorot(m.w1.rows(), m.w1.cols(), rng);
  m.w2 = glorot(m.w2.rows(), m.w2.cols(), rng);
}

GinBlock alloc_gin(int in, int hidden, int out) {
  GinBlock b;
  b.l1.eps = Mat::Zero(1, 1);
  b.l1.mlp = alloc_mlp(in, hidden, out);
  b.l2.eps = Mat::Zero(1, 1);
  b.l2.mlp = alloc_mlp(out, hidden, out);
  return b;
}

int encoder_channels(const RunConfig& cfg) { return cfg.motifs_enabled ? kMotifCount : 1; }

ModelState allocate_state(const RunConfig& cfg, std::int32_t n_entities, std::int32_t n_relations) {
  ModelState s;
  s.cfg = cfg;
  s.node_features = Mat::Zero(n_entities, cfg.d0);
  s.relation_features = Mat::Zero(n_relations, cfg.d1);
  s.gates.resize(static_cast<std::size_t>(cfg.K));
  for (auto& g : s.gates) {
    g.w_node = Mat::Zero(cfg.d0, cfg.d2);
    g.w_rel = Mat::Zero(cfg.d1, cfg.d2);
  }
  int channels = encoder_channels(cfg);
  s.encoder.gins.clear();
  for (int c = 0; c < channels; ++c) s.encoder.gins.push_back(alloc_gin(cfg.d0, cfg.gin_hidden, cfg.d4));
  s.encoder.readout_w = Mat::Zero(channels * cfg.d4, 2 * cfg.d3);
  s.encoder.readout_b = Mat::Zero(1, 2 * cfg.d3);
  s.classifier = alloc_mlp(cfg.d3, cfg.cls_hidden, 1);
  return s;
}

template <typename State, typename Ref>
std::vector<Ref> registry_impl(State& s) {
  std::vector<Ref> r;
  auto push = [&r](std::string name, auto* mat) { r.push_back(Ref{std::move(name), mat}); };
  push("node_features", &s.node_features);
  push("relation_features", &s.relation_features);
  for (std::size_t k = 0; k < s.gates.size(); ++k) {
    push("gate" + std::to_string(k) + ".w_node", &s.gates[k].w_node);
    push("gate" + std::to_string(k) + ".w_rel", &s.gates[k].w_rel);
  }
  for (std::size_t c = 0; c < s.encoder.gins.size(); ++c) {
    auto& g = s.encoder.gins[c];
    std::string base = "gin" + std::to_string(c);
    push(base + ".l1.eps", &g.l1.eps);
    push(base + ".l1.w1", &g.l1.mlp.w1);
    push(base + ".l1.b1", &g.l1.mlp.b1);
    push(base + ".l1.w2", &g.l1.mlp.w2);
    push(base + ".l1.b2", &g.l1.mlp.b2);
    push(base + ".l2.eps", &g.l2.eps);
    push(base + ".l2.w1", &g.l2.mlp.w1);
    push(base + ".l2.b1", &g.l2.mlp.b1);
    push(base + ".l2.w2", &g.l2.mlp.w2);
    push(base + ".l2.b2", &g.l2.mlp.b2);
  }
  push("readout.w", &s.encoder.readout_w);
  push("readout.b", &s.encoder.readout_b);
  push("cls.w1", &s.classifier.w1);
  push("cls.b1", &s.classifier.b1);
  push("cls.w2", &s.classifier.w2);
  push("cls.b2", &s.classifier.b2);
  return r;
}

}  // namespace

std::vector<ParamRef> param_registry(ModelState& state) {
  return registry_impl<ModelState, ParamRef>(state);
}

std::vector<ConstParamRef> param_registry(const ModelState& state) {
  return registry_impl<const ModelState, ConstParamRef>(state);
}

ModelState init_model(const JointGraph& g, const RunConfig& cfg) {
  cfg.validate();
  if (g.node_features.cols() != cfg.d0 || g.relation_features.cols() != cfg.d1) {
    fail(ErrorCode::shape, "joint graph feature widths do not match d0/d1");
  }
  ModelState s = allocate_state(cfg, g.entities.size(), g.relations.size());
  s.entities = g.entities;
  s.relations = g.relations;
  s.sl_relation = g.sl_relation;
  s.sl_pairs = g.sl_pairs;
  s.node_features = g.node_features;
  s.relation_features = g.relation_features;

  Rng rng(mix_seed(cfg.seed, 0x11717));
  for (auto& gate : s.gates) {
    gate.w_node = glorot(gate.w_node.rows(), gate.w_node.cols(), rng);
    gate.w_rel = glorot(gate.w_rel.rows(), gate.w_rel.cols(), rng);
  }
  for (auto& gin : s.encoder.gins) {
    randomize_mlp(gin.l1.mlp, rng);
    randomize_mlp(gin.l2.mlp, rng);
  }
  s.encoder.readout_w =
      glorot(s.encoder.readout_w.rows(), s.encoder.readout_w.cols(), rng, kReadoutGain);
  // start the posterior narrow: softplus(-2) ~ 0.13 keeps the early sampled
  // representations close to their means instead of noise-dominated
  s.encoder.readout_b.rightCols(cfg.d3).setConstant(-2.0);
  randomize_mlp(s.classifier, rng);
  return s;
}

PairContext build_pair_context(const JointGraph& g, const LabeledPair& pair, const RunConfig& cfg) {
  PairContext ctx;
  ctx.pair = pair;
  ctx.eg = extract_enclosing(g, pair.u, pair.v, cfg.t_hops);
  ctx.collapsed = collapse_multigraph(ctx.eg);
  ctx.instances = enumerate_instances(ctx.collapsed.g);
  ctx.edge_src.reserve(ctx.eg.edges.size());
  for (const auto& e : ctx.eg.edges) {
    ctx.edge_src.push_back(e.head);
    ctx.edge_dst.push_back(e.tail);
    ctx.edge_rel.push_back(e.relation);
  }
  return ctx;
}

namespace {

// Tape leaves for every parameter plus the pair's local feature rows.
struct BoundModel {
  Tape* tape = nullptr;
  const ModelState* state = nullptr;
  const PairContext* ctx = nullptr;
  std::vector<Var> params;
  std::unordered_map<std::string, int> index;
  Var x_local;

  Var p(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) fail(ErrorCode::shape, "unknown parameter " + name);
    return params[static_cast<std::size_t>(it->second)];
  }
};

BoundModel bind(Tape& tape, const ModelState& state, const PairContext& ctx) {
  BoundModel b;
  b.tape = &tape;
  b.state = &state;
  b.ctx = &ctx;
  auto reg = param_registry(state);
  b.params.resize(reg.size());
  for (std::size_t i = 0; i < reg.size(); ++i) {
    b.index[reg[i].name] = static_cast<int>(i);
    if (i == 0) continue;  // node table enters through x_local rows only
    b.params[i] = tape.leaf(*reg[i].mat);
  }
  Mat xl(static_cast<Eigen::Index>(ctx.eg.nodes.size()), state.cfg.d0);
  for (std::size_t i = 0; i < ctx.eg.nodes.size(); ++i) {
    xl.row(static_cast<Eigen::Index>(i)) = state.node_features.row(ctx.eg.nodes[i]);
  }
  b.x_local = tape.leaf(std::move(xl));
  return b;
}

Var mlp2_tape(Tape&, Var x, Var w1, Var b1, Var w2, Var b2) {
  Var h = vtanh(add_rowvec(matmul(x, w1), b1));
  return add_rowvec(matmul(h, w2), b2);
}

Var gin_layer_tape(Tape& t, Var m, Var h, Var eps, Var w1, Var b1, Var w2, Var b2) {
  Var self = scalar_mul(add_scalar(eps, 1.0), h);
  Var agg = add(self, matmul(m, h));
  return mlp2_tape(t, agg, w1, b1, w2, b2);
}

// Raw scores per edge for explanation k: (W1 x_j) . tanh(W1 x_i + W2 e_r).
Var raw_scores_k(const BoundModel& b, int k) {
  Tape& tape = *b.tape;
  Var x_src = gather_rows(b.x_local, b.ctx->edge_src);
  Var x_dst = gather_rows(b.x_local, b.ctx->edge_dst);
  Var e_rel = gather_rows(b.p("relation_features"), b.ctx->edge_rel);
  Var wn = b.p("gate" + std::to_string(k) + ".w_node");
  Var wr = b.p("gate" + std::to_string(k) + ".w_rel");
  Var a = matmul(x_dst, wn);
  Var t = vtanh(add(matmul(x_src, wn), matmul(e_rel, wr)));
  (void)tape;
  return row_sum(cmul(a, t));
}

// From per-edge gates to (mu, sigma, z, logit). Shared by the training
// forward, prediction, and the gate-perturbation hook.
void finish_k(const BoundModel& b, KForward& kf, Var edge_gates, Mode mode, Rng* rng) {
  Tape& tape = *b.tape;
  const auto& cfg = b.state->cfg;
  int n = static_cast<int>(b.ctx->eg.nodes.size());
  bool has_edges = !b.ctx->eg.edges.empty();

  Var arc_gates;
  if (has_edges) arc_gates = segment_max(edge_gates, b.ctx->collapsed.edge_segments);

  std::vector<Var> channel_mats;
  if (cfg.motifs_enabled) {
    channel_mats.reserve(kMotifCount);
    for (int i = 0; i < kMotifCount; ++i) {
      if (has_edges) {
        channel_mats.push_back(
            weighted_motif_matrix(arc_gates, b.ctx->instances[static_cast<std::size_t>(i)], n));
      } else {
        channel_mats.push_back(tape.leaf(Mat::Zero(n, n)));
      }
    }
  } else {
    if (has_edges) {
      channel_mats.push_back(scatter_arc_matrix(arc_gates, b.ctx->collapsed.g.arcs, n));
    } else {
      channel_mats.push_back(tape.leaf(Mat::Zero(n, n)));
    }
  }

  std::vector<Var> outs;
  outs.reserve(channel_mats.size());
  for (std::size_t c = 0; c < channel_mats.size(); ++c) {
    std::string base = "gin" + std::to_string(c);
    Var h1 = gin_layer_tape(tape, channel_mats[c], b.x_local, b.p(base + ".l1.eps"),
                            b.p(base + ".l1.w1"), b.p(base + ".l1.b1"), b.p(base + ".l1.w2"),
                            b.p(base + ".l1.b2"));
    Var h2 = gin_layer_tape(tape, channel_mats[c], h1, b.p(base + ".l2.eps"),
                            b.p(base + ".l2.w1"), b.p(base + ".l2.b1"), b.p(base + ".l2.w2"),
                            b.p(base + ".l2.b2"));
    outs.push_back(h2);
  }
  Var concat = outs.size() == 1 ? outs[0] : hcat(outs);
  Var pooled = mean_rows(concat);
  Var proj = add_rowvec(matmul(pooled, b.p("readout.w")), b.p("readout.b"));
  kf.mu = cols(proj, 0, cfg.d3);
  // softplus can underflow to an exact zero once the compression pressure
  // drives the pre-activation far negative; keep the variance strictly positive
  kf.sigma = add_scalar(vsoftplus(cols(proj, cfg.d3, cfg.d3)), 1e-8);

  if (mode == Mode::train) {
    Mat eta(1, cfg.d3);
    for (int i = 0; i < cfg.d3; ++i) eta(0, i) = rng->normal();
    kf.z = add(kf.mu, cmul_const(vsqrt(kf.sigma), eta));
  } else {
    kf.z = kf.mu;
  }
  Var h = vtanh(add_rowvec(matmul(kf.z, b.p("cls.w1")), b.p("cls.b1")));
  kf.logit = add_rowvec(matmul(h, b.p("cls.w2")), b.p("cls.b2"));
}

}  // namespace

ForwardPass model_forward(Tape& tape, const ModelState& state, const PairContext& ctx,
                          Mode mode, std::uint64_t noise_seed) {
  const auto& cfg = state.cfg;
  BoundModel b = bind(tape, state, ctx);
  ForwardPass fp;
  fp.x_local = b.x_local;
  fp.params = b.params;

  Rng rng(noise_seed);
  auto m = static_cast<Eigen::Index>(ctx.eg.edges.size());
  for (int k = 0; k < cfg.K; ++k) {
    KForward kf;
    if (m == 0) {
      kf.scores = tape.leaf(Mat(0, 1));
      kf.gates = kf.scores;
    } else if (cfg.gib_enabled) {
      kf.scores = vsigmoid(raw_scores_k(b, k));
      if (mode == Mode::train) {
        Eigen::ArrayXd eps(m);
        for (Eigen::Index i = 0; i < m; ++i) eps[i] = rng.uniform();
        kf.gates = concrete_relax(kf.scores, eps, cfg.tau);
      } else {
        kf.gates = kf.scores;
      }
    } else {
      // Attention ablation: deterministic softmax weights over the raw
      // scores replace the stochastic bottleneck gates.
      Var raw = raw_scores_k(b, k);
      kf.scores = vsigmoid(raw);
      double shift = raw.value().maxCoeff();
      Var s = vexp(add_scalar(raw, -shift));
      Var inv = vexp(scale(vlog(sum(s)), -1.0));
      kf.gates = scalar_mul(inv, s);
    }
    finish_k(b, kf, kf.gates, mode, &rng);
    fp.ks.push_back(kf);
  }
  return fp;
}

LossNodes attach_loss(Tape& tape, const ForwardPass& fwd, int label, const RunConfig& cfg) {
  if (label != 0 && label != 1) fail(ErrorCode::domain, "label must be 0 or 1");
  if (static_cast<int>(fwd.ks.size()) != cfg.K) fail(ErrorCode::config, "forward K mismatch");
  LossNodes out;
  Var ce_sum, kl_sum;
  std::vector<Var> zs;
  for (const auto& kf : fwd.ks) {
    Var ce = binary_ce_logit(kf.logit, static_cast<double>(label));
    Var kl = gaussian_kl_node(kf.mu, kf.sigma);
    ce_sum = ce_sum.valid() ? add(ce_sum, ce) : ce;
    kl_sum = kl_sum.valid() ? add(kl_sum, kl) : kl;
    zs.push_back(kf.z);
  }
  double inv_k = 1.0 / static_cast<double>(cfg.K);
  out.ce = scale(ce_sum, inv_k);
  out.kl = scale(kl_sum, inv_k);
  out.dpp = gram_det(zs.size() == 1 ? zs[0] : vcat(zs));

  Var total = out.ce;
  if (cfg.gib_enabled && cfg.beta1 > 0.0) total = add(total, scale(out.kl, cfg.beta1));
  double beta2 = cfg.dpp_enabled ? cfg.beta2 : 0.0;
  if (beta2 > 0.0) total = sub(total, scale(out.dpp, beta2));
  out.total = total;
  return out;
}

PairGrad backward_pair(Tape& tape, const ForwardPass& fwd, const LossNodes& loss,
                       const PairContext& ctx) {
  (void)ctx;
  tape.backward(loss.total);
  PairGrad g;
  g.params.resize(fwd.params.size());
  for (std::size_t i = 1; i < fwd.params.size(); ++i) g.params[i] = fwd.params[i].grad();
  g.x_local = fwd.x_local.grad();
  g.loss.ce = loss.ce.value()(0, 0);
  g.loss.kl = loss.kl.value()(0, 0);
  g.loss.dpp = loss.dpp.value()(0, 0);
  g.loss.total = loss.total.value()(0, 0);
  return g;
}

void GradAccumulator::init_like(ModelState& state) {
  auto reg = param_registry(state);
  node_features = Mat::Zero(state.node_features.rows(), state.node_features.cols());
  params.assign(reg.size(), Mat());
  for (std::size_t i = 1; i < reg.size(); ++i) {
    params[i] = Mat::Zero(reg[i].mat->rows(), reg[i].mat->cols());
  }
}

void GradAccumulator::add(const PairGrad& grad, const PairContext& ctx, double weight) {
  for (std::size_t i = 0; i < ctx.eg.nodes.size(); ++i) {
    node_features.row(ctx.eg.nodes[i]) += weight * grad.x_local.row(static_cast<Eigen::Index>(i));
  }
  for (std::size_t i = 1; i < params.size(); ++i) params[i] += weight * grad.params[i];
}

void sgd_step(ModelState& state, const GradAccumulator& grads, double lr) {
  if (lr <= 0.0) fail(ErrorCode::config, "learning rate must be > 0");
  auto reg = param_registry(state);
  if (!grads.node_features.allFinite()) {
    fail(ErrorCode::numeric, "non-finite gradient in node_features");
  }
  for (std::size_t i = 1; i < reg.size(); ++i) {
    if (!grads.params[i].allFinite()) {
      fail(ErrorCode::numeric, "non-finite gradient in " + reg[i].name);
    }
  }
  state.node_features -= lr * grads.node_features;
  for (std::size_t i = 1; i < reg.size(); ++i) *reg[i].mat -= lr * grads.params[i];
}

TrainOutput train_model(const JointGraph& g, const std::vector<LabeledPair>& train_pairs,
                        const std::vector<LabeledPair>& test_pairs, const RunConfig& cfg) {
  cfg.validate();
  if (train_pairs.empty()) fail(ErrorCode::config, "empty training split");

#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  TrainOutput out;
  out.state = init_model(g, cfg);
  ModelState& state = out.state;

  auto build_contexts = [&](const std::vector<LabeledPair>& pairs) {
    std::vector<PairContext> ctxs(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
      ctxs[static_cast<std::size_t>(i)] =
          build_pair_context(g, pairs[static_cast<std::size_t>(i)], cfg);
    }
    return ctxs;
  };
  auto train_ctx = build_contexts(train_pairs);
  auto test_ctx = build_contexts(test_pairs);

  auto eval_split = [&](const std::vector<PairContext>& ctxs) {
    LossBreakdown mean{};
    std::vector<LossBreakdown> per(ctxs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ctxs.size()); ++i) {
      const auto& ctx = ctxs[static_cast<std::size_t>(i)];
      Tape tape;
      auto fwd = model_forward(tape, state, ctx, Mode::test, 0);
      auto loss = attach_loss(tape, fwd, ctx.pair.label, cfg);
      LossBreakdown lb;
      lb.ce = loss.ce.value()(0, 0);
      lb.kl = loss.kl.value()(0, 0);
      lb.dpp = loss.dpp.value()(0, 0);
      lb.total = loss.total.value()(0, 0);
      per[static_cast<std::size_t>(i)] = lb;
    }
    for (const auto& lb : per) {
      mean.ce += lb.ce;
      mean.kl += lb.kl;
      mean.dpp += lb.dpp;
      mean.total += lb.total;
    }
    double n = std::max<double>(1.0, static_cast<double>(ctxs.size()));
    mean.ce /= n;
    mean.kl /= n;
    mean.dpp /= n;
    mean.total /= n;
    return mean;
  };

  std::vector<int> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, 0x5481, static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);

    LossBreakdown train_sum{};
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::size_t bs = stop - start;
      std::vector<PairGrad> grads(bs);
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(bs); ++b) {
        int pair_idx = order[start + static_cast<std::size_t>(b)];
        const auto& ctx = train_ctx[static_cast<std::size_t>(pair_idx)];
        Tape tape;
        auto fwd = model_forward(tape, state, ctx, Mode::train,
                                 mix_seed(cfg.seed, 0xA001, static_cast<std::uint64_t>(epoch),
                                          static_cast<std::uint64_t>(pair_idx)));
        auto loss = attach_loss(tape, fwd, ctx.pair.label, cfg);
        grads[static_cast<std::size_t>(b)] = backward_pair(tape, fwd, loss, ctx);
      }
      GradAccumulator acc;
      acc.init_like(state);
      double w = 1.0 / static_cast<double>(bs);
      for (std::size_t b = 0; b < bs; ++b) {
        int pair_idx = order[start + b];
        acc.add(grads[b], train_ctx[static_cast<std::size_t>(pair_idx)], w);
        train_sum.ce += grads[b].loss.ce;
        train_sum.kl += grads[b].loss.kl;
        train_sum.dpp += grads[b].loss.dpp;
        train_sum.total += grads[b].loss.total;
        ++seen;
      }
      sgd_step(state, acc, cfg.lr);
    }

    TrainLogRow row;
    row.epoch = epoch;
    row.split = "train";
    double n = static_cast<double>(seen);
    row.mean.ce = train_sum.ce / n;
    row.mean.kl = train_sum.kl / n;
    row.mean.dpp = train_sum.dpp / n;
    row.mean.total = train_sum.total / n;
    out.log.push_back(row);

    if (!test_ctx.empty()) {
      TrainLogRow trow;
      trow.epoch = epoch;
      trow.split = "test";
      trow.mean = eval_split(test_ctx);
      out.log.push_back(trow);
    }
  }
  return out;
}

double predict_ctx(const ModelState& state, const PairContext& ctx) {
  Tape tape;
  auto fwd = model_forward(tape, state, ctx, Mode::test, 0);
  double acc = 0.0;
  for (const auto& kf : fwd.ks) acc += sigmoid(kf.logit.value()(0, 0));
  return acc / static_cast<double>(fwd.ks.size());
}

double predict_pair(const ModelState& state, const JointGraph& g, EntityId u, EntityId v) {
  auto ctx = build_pair_context(g, {u, v, 0}, state.cfg);
  return predict_ctx(state, ctx);
}

double predict_with_gates(const ModelState& state, const PairContext& ctx, int k,
                          const Vec& edge_gates) {
  if (k < 1 || k > state.cfg.K) fail(ErrorCode::domain, "explanation index outside 1..K");
  if (edge_gates.size() != static_cast<Eigen::Index>(ctx.eg.edges.size())) {
    fail(ErrorCode::shape, "gate vector does not match edge count");
  }
  Tape tape;
  BoundModel b = bind(tape, state, ctx);
  KForward kf;
  Var gates = tape.leaf(edge_gates);
  kf.scores = gates;
  finish_k(b, kf, gates, Mode::test, nullptr);
  return sigmoid(kf.logit.value()(0, 0));
}

ExplanationResult explain_ctx(const ModelState& state, const PairContext& ctx,
                              const std::vector<double>& custom_thresholds) {
  Tape tape;
  auto fwd = model_forward(tape, state, ctx, Mode::test, 0);
  ExplanationResult res;
  double acc = 0.0;
  Mat u_rows(state.cfg.K, state.cfg.d3);
  for (int k = 0; k < state.cfg.K; ++k) {
    const auto& kf = fwd.ks[static_cast<std::size_t>(k)];
    acc += sigmoid(kf.logit.value()(0, 0));
    u_rows.row(k) = kf.z.value().row(0);

    ExplanationResult::PerK per;
    per.k = k + 1;
    per.scores = kf.scores.value().col(0);
    HardExplanation hard =
        static_cast<std::size_t>(k) < custom_thresholds.size()
            ? hard_threshold(per.scores, custom_thresholds[static_cast<std::size_t>(k)])
            : hard_threshold(per.scores);
    per.threshold = hard.threshold;
    per.kept_edges = std::move(hard.kept_edges);
    res.per_k.push_back(std::move(per));
  }
  res.confidence = acc / static_cast<double>(state.cfg.K);
  res.dpp = gram_det(u_rows);
  return res;
}

std::string explanation_json(const ModelState& state, const JointGraph& g,
                             const std::vector<std::pair<EntityId, EntityId>>& queries,
                             const std::vector<double>& custom_thresholds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [u, v] : queries) {
    auto ctx = build_pair_context(g, {u, v, 0}, state.cfg);
    auto res = explain_ctx(state, ctx, custom_thresholds);
    for (const auto& pk : res.per_k) {
      nlohmann::json edges = nlohmann::json::array();
      for (int idx : pk.kept_edges) {
        const auto& e = ctx.eg.edges[static_cast<std::size_t>(idx)];
        edges.push_back({{"head", g.entities.name(ctx.eg.nodes[static_cast<std::size_t>(e.head)])},
                         {"relation", g.relations.name(e.relation)},
                         {"tail", g.entities.name(ctx.eg.nodes[static_cast<std::size_t>(e.tail)])},
                         {"weight", pk.scores[idx]}});
      }
      arr.push_back({{"pair", {g.entities.name(u), g.entities.name(v)}},
                     {"k", pk.k},
                     {"threshold", pk.threshold},
                     {"edges", edges},
                     {"confidence", res.confidence},
                     {"dpp", res.dpp}});
    }
  }
  return arr.dump(2) + "\n";
}

// --- checkpoint ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'G', 'I', 'B', 'C', 'K', 'P', '1'};

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); }
void put_i32(std::string& out, std::int32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

void put_mat(std::string& out, const Mat& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      out.append(reinterpret_cast<const char*>(&v), 8);
    }
  }
}

struct Reader {
  const std::string* data;
  std::size_t at = 0;

  void need(std::size_t n) const {
    if (at + n > data->size()) fail(ErrorCode::parse, "truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data->data() + at, 4);
    at += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, data->data() + at, 8);
    at += 8;
    return v;
  }
  std::int32_t i32() {
    need(4);
    std::int32_t v;
    std::memcpy(&v, data->data() + at, 4);
    at += 4;
    return v;
  }
  std::string str() {
    auto len = u32();
    need(len);
    std::string s(data->data() + at, len);
    at += len;
    return s;
  }
  Mat mat() {
    auto rows = static_cast<Eigen::Index>(u64());
    auto cols = static_cast<Eigen::Index>(u64());
    need(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v;
        std::memcpy(&v, data->data() + at, 8);
        at += 8;
        m(i, j) = v;
      }
    }
    return m;
  }
};

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, 1);  // version
  put_string(out, config_to_text(state.cfg));
  put_u32(out, static_cast<std::uint32_t>(state.entities.size()));
  for (const auto& name : state.entities.names) put_string(out, name);
  put_u32(out, static_cast<std::uint32_t>(state.relations.size()));
  for (const auto& name : state.relations.names) put_string(out, name);
  put_i32(out, state.sl_relation);
  put_u64(out, state.sl_pairs.size());
  for (const auto& [u, v] : state.sl_pairs) {
    put_i32(out, u);
    put_i32(out, v);
  }
  auto reg = param_registry(state);
  put_u64(out, reg.size());
  for (const auto& ref : reg) {
    put_string(out, ref.name);
    put_mat(out, *ref.mat);
  }
  write_file_atomic(path, out);
}

ModelState load_checkpoint(const std::string& path) {
  std::string data = read_file(path);
  Reader r{&data};
  r.need(8);
  if (std::memcmp(data.data(), kMagic, 8) != 0) fail(ErrorCode::parse, "not a checkpoint file: " + path);
  r.at = 8;
  auto version = r.u32();
  if (version != 1) fail(ErrorCode::parse, "unsupported checkpoint version " + std::to_string(version));
  RunConfig cfg = parse_config_text(r.str(), path);

  auto n_entities = static_cast<std::int32_t>(r.u32());
  Vocab entities;
  for (std::int32_t i = 0; i < n_entities; ++i) entities.intern(r.str());
  auto n_relations = static_cast<std::int32_t>(r.u32());
  Vocab relations;
  for (std::int32_t i = 0; i < n_relations; ++i) relations.intern(r.str());

  ModelState s = allocate_state(cfg, n_entities, n_relations);
  s.entities = std::move(entities);
  s.relations = std::move(relations);
  s.sl_relation = r.i32();
  auto n_sl = r.u64();
  s.sl_pairs.reserve(n_sl);
  for (std::uint64_t i = 0; i < n_sl; ++i) {
    EntityId u = r.i32();
    EntityId v = r.i32();
    s.sl_pairs.emplace_back(u, v);
  }
  auto reg = param_registry(s);
  auto n_params = r.u64();
  if (n_params != reg.size()) fail(ErrorCode::parse, "checkpoint parameter count mismatch");
  for (auto& ref : reg) {
    std::string name = r.str();
    if (name != ref.name) fail(ErrorCode::parse, "checkpoint parameter order mismatch at " + name);
    Mat m = r.mat();
    if (m.rows() != ref.mat->rows() || m.cols() != ref.mat->cols()) {
      fail(ErrorCode::shape, "checkpoint shape mismatch for " + name);
    }
    *ref.mat = std::move(m);
  }
  return s;
}

JointGraph rebuild_joint_graph(const ModelState& state, const std::string& kg_path) {
  JointGraph g;
  g.entities = state.entities;
  g.relations = state.relations;
  g.sl_relation = state.sl_relation;
  g.out_edges.assign(static_cast<std::size_t>(g.entities.size()), {});
  g.in_edges.assign(static_cast<std::size_t>(g.entities.size()), {});

  auto add_edge = [&g](EntityId h, RelationId r, EntityId t) {
    g.out_edges[static_cast<std::size_t>(h)].push_back({r, t});
    g.in_edges[static_cast<std::size_t>(t)].push_back({r, h});
    ++g.edge_count;
  };

  std::istringstream in(read_file(kg_path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      fail(ErrorCode::parse, kg_path + ": line " + std::to_string(lineno) + ": expected 3 fields");
    }
    auto h = g.entities.lookup(fields[0]);
    auto rel = g.relations.lookup(fields[1]);
    auto t = g.entities.lookup(fields[2]);
    if (h < 0) fail(ErrorCode::data, "entity '" + fields[0] + "' not in model vocabulary");
    if (t < 0) fail(ErrorCode::data, "entity '" + fields[2] + "' not in model vocabulary");
    if (rel < 0) fail(ErrorCode::data, "relation '" + fields[1] + "' not in model vocabulary");
    add_edge(h, rel, t);
  }
  for (const auto& [u, v] : state.sl_pairs) add_edge(u, g.sl_relation, v);
  g.sl_pairs = state.sl_pairs;
  g.node_features = state.node_features;
  g.relation_features = state.relation_features;
  return g;
}

}  // namespace dgib
