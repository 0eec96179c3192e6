#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dgib/graph_store.hpp"

namespace dgib {

using Vec = Eigen::VectorXd;

// Per-explanation edge scoring weights. w_node maps node features and w_rel
// maps relation features into the shared d2-dimensional relational space;
// both are stored input-major (d0 x d2 and d1 x d2).
struct GatePair {
  Mat w_node;
  Mat w_rel;
};

// Raw score of edge (i, r, j):  (W1 x_j) . tanh(W1 x_i + W2 e_r).
// Returned per edge, in enclosing-graph edge order.
Vec score_edges_raw(const EnclosingGraph& eg, const Mat& node_features,
                    const Mat& relation_features, const GatePair& params);

// Logistic squash of the raw scores into (0,1); non-edges are implicitly 0.
Vec score_edges(const EnclosingGraph& eg, const Mat& node_features,
                const Mat& relation_features, const GatePair& params);

// Concrete relaxation of Bernoulli(b) at temperature tau with the given
// uniform noise values (one per edge). Clamps b to [1e-6, 1-1e-6] first.
Vec relax_sample(const Vec& scores, const Vec& eps, double tau);

// Same, drawing eps from the rng (one uniform per edge, in order).
Vec relax_sample(const Vec& scores, double tau, class Rng& rng);

struct HardExplanation {
  double threshold = 0.0;          // the median actually used
  std::vector<int> kept_edges;     // indices into the score vector
};

// Keeps edges strictly above the median score; ties at the median drop out.
HardExplanation hard_threshold(const Vec& scores);

// Custom-threshold variant (keep score > threshold).
HardExplanation hard_threshold(const Vec& scores, double threshold);

}  // namespace dgib
