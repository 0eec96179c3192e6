#pragma once

#include <Eigen/Core>
#include <vector>

#include "dgib/types.hpp"

namespace dgib {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Two-layer perceptron, input-major weights: w1 (in x h), b1 (1 x h),
// w2 (h x out), b2 (1 x out); tanh between the layers.
struct Mlp2 {
  Mat w1, b1, w2, b2;
};

Mat mlp2_forward(const Mat& x, const Mlp2& mlp);

// One GIN round: h' = MLP((1 + eps) h + M h). eps is a learnable 1x1.
struct GinLayer {
  Mat eps;  // 1x1
  Mlp2 mlp;
};

// A 2-layer GIN as one motif channel.
struct GinBlock {
  GinLayer l1, l2;
};

Mat gin_aggregate(const Mat& m, const Mat& h, double eps);
Mat gin_layer_forward(const Mat& m, const Mat& h, const GinLayer& layer);
Mat gin_forward(const Mat& m, const Mat& x, const GinBlock& gin);  // n x d4

// Channel GINs (13, or 1 with motifs disabled) plus the readout projection
// (channels * d4) -> 2 * d3. Shared across all K explanations.
struct EncoderParams {
  std::vector<GinBlock> gins;
  Mat readout_w;  // (channels * d4) x (2 * d3)
  Mat readout_b;  // 1 x (2 * d3)
};

struct GaussianEmbedding {
  Vec mu;
  Vec sigma;  // positive diagonal variance
};

// Runs each channel GIN on its adjacency, concatenates per-node embeddings,
// mean-pools over nodes, projects to 2*d3; first half is mu, second half
// passes through softplus to give a positive variance diagonal.
GaussianEmbedding encode(const std::vector<Mat>& channel_adjacencies, const Mat& x_local,
                         const EncoderParams& params);

// z = mu + sqrt(sigma) .* eta with eta ~ N(0, I) drawn from rng.
Vec reparameterize(const GaussianEmbedding& g, class Rng& rng);
Vec reparameterize_with(const GaussianEmbedding& g, const Vec& eta);

}  // namespace dgib
