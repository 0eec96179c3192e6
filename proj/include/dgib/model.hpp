#pragma once

#include <array>
#include <string>
#include <vector>

#include "dgib/config.hpp"
#include "dgib/edge_gate.hpp"
#include "dgib/encoder.hpp"
#include "dgib/graph_store.hpp"
#include "dgib/motifs.hpp"
#include "dgib/objective.hpp"
#include "dgib/tape.hpp"

namespace dgib {

// Every trainable tensor plus the vocabularies and the SL edges that were
// baked into the training joint graph (needed to rebuild it at predict time).
struct ModelState {
  RunConfig cfg;
  Vocab entities;
  Vocab relations;
  RelationId sl_relation = -1;
  std::vector<std::pair<EntityId, EntityId>> sl_pairs;

  Mat node_features;
  Mat relation_features;
  std::vector<GatePair> gates;  // one block per explanation k
  EncoderParams encoder;
  Mlp2 classifier;  // d3 -> cls_hidden -> 1
};

ModelState init_model(const JointGraph& g, const RunConfig& cfg);

// Stable enumeration of every parameter matrix; gradients, SGD, checkpoints
// and the finite-difference checks all walk this list in order.
struct ParamRef {
  std::string name;
  Mat* mat;
};
struct ConstParamRef {
  std::string name;
  const Mat* mat;
};
std::vector<ParamRef> param_registry(ModelState& state);
std::vector<ConstParamRef> param_registry(const ModelState& state);

// Per-pair cached topology: enclosing graph, collapsed arc view, and motif
// instances matched on the binary support.
struct PairContext {
  LabeledPair pair;
  EnclosingGraph eg;
  CollapsedGraph collapsed;
  std::array<InstanceSet, kMotifCount> instances;
  std::vector<int> edge_src, edge_dst, edge_rel;  // per multigraph edge, local/relation ids
};

PairContext build_pair_context(const JointGraph& g, const LabeledPair& pair, const RunConfig& cfg);

enum class Mode { train, test };

struct KForward {
  Var scores;  // per-edge B_k, m x 1
  Var gates;   // per-edge gates fed to the motif matrices
  Var mu;      // 1 x d3
  Var sigma;   // 1 x d3
  Var z;       // 1 x d3
  Var logit;   // 1 x 1
};

struct ForwardPass {
  std::vector<KForward> ks;
  Var x_local;              // leaf holding the pair's node-feature rows
  std::vector<Var> params;  // aligned with param_registry; slot 0 (node table) unused
};

// Full differentiable chain for one pair. Noise (edge uniforms, then d3
// normals, per k in order) comes from noise_seed; test mode draws nothing.
ForwardPass model_forward(Tape& tape, const ModelState& state, const PairContext& ctx,
                          Mode mode, std::uint64_t noise_seed);

struct LossNodes {
  Var ce, kl, dpp, total;
};

LossNodes attach_loss(Tape& tape, const ForwardPass& fwd, int label, const RunConfig& cfg);

// Gradients of one pair's loss, aligned with the registry.
struct PairGrad {
  Mat x_local;              // rows follow ctx.eg.nodes
  std::vector<Mat> params;  // slot 0 empty
  LossBreakdown loss;
};

PairGrad backward_pair(Tape& tape, const ForwardPass& fwd, const LossNodes& loss,
                       const PairContext& ctx);

// p <- p - lr * g for every parameter; throws Error(numeric) on non-finite
// gradients, naming the parameter.
struct GradAccumulator {
  Mat node_features;
  std::vector<Mat> params;
  void init_like(ModelState& state);
  void add(const PairGrad& grad, const PairContext& ctx, double weight);
};

void sgd_step(ModelState& state, const GradAccumulator& grads, double lr);

struct TrainLogRow {
  int epoch;
  std::string split;  // "train" or "test"
  LossBreakdown mean;
};

struct TrainOutput {
  ModelState state;
  std::vector<TrainLogRow> log;
};

// Mini-batch SGD over shuffled pairs; deterministic per cfg.seed regardless
// of thread count (per-pair gradients reduce in pair order).
TrainOutput train_model(const JointGraph& g, const std::vector<LabeledPair>& train_pairs,
                        const std::vector<LabeledPair>& test_pairs, const RunConfig& cfg);

// Test-mode confidence: mean over k of sigmoid(logit_k).
double predict_ctx(const ModelState& state, const PairContext& ctx);
double predict_pair(const ModelState& state, const JointGraph& g, EntityId u, EntityId v);

// Confidence of explanation channel k (1-based) with the edge gates replaced
// by an explicit vector; the hook the infidelity metric perturbs.
double predict_with_gates(const ModelState& state, const PairContext& ctx, int k,
                          const Vec& edge_gates);

struct ExplanationResult {
  double confidence = 0.0;
  double dpp = 0.0;  // gram determinant of the K representations
  struct PerK {
    int k = 0;  // 1-based
    double threshold = 0.0;
    std::vector<int> kept_edges;  // indices into eg.edges
    Vec scores;                   // full B_k over edges
  };
  std::vector<PerK> per_k;
};

// Median-hardened explanations (or custom per-k thresholds when given).
ExplanationResult explain_ctx(const ModelState& state, const PairContext& ctx,
                              const std::vector<double>& custom_thresholds = {});

// JSON document with one object per (pair, k): {pair, k, threshold, edges,
// confidence, dpp}; edges carry head/relation/tail names and weights.
std::string explanation_json(const ModelState& state, const JointGraph& g,
                             const std::vector<std::pair<EntityId, EntityId>>& queries,
                             const std::vector<double>& custom_thresholds = {});

// Versioned, self-describing binary checkpoint; byte-identical for identical
// states and bit-exact through a save/load round trip.
void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path);

// Rebuilds the training-time joint graph for a loaded model: KG triples are
// resolved strictly against the checkpoint vocabulary, SL edges come from the
// checkpoint, features come from the model.
JointGraph rebuild_joint_graph(const ModelState& state, const std::string& kg_path);

}  // namespace dgib
