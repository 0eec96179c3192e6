#include "dgib/encoder.hpp"

#include <cmath>

#include "dgib/rng.hpp"

namespace dgib {

Mat mlp2_forward(const Mat& x, const Mlp2& mlp) {
  if (x.cols() != mlp.w1.rows()) fail(ErrorCode::shape, "mlp input width mismatch");
  Mat h = x * mlp.w1;
  h.rowwise() += mlp.b1.row(0);
  h = h.array().tanh();
  Mat out = h * mlp.w2;
  out.rowwise() += mlp.b2.row(0);
  return out;
}

Mat gin_aggregate(const Mat& m, const Mat& h, double eps) {
  if (m.rows() != m.cols() || m.rows() != h.rows()) fail(ErrorCode::shape, "gin aggregate shapes");
  return (1.0 + eps) * h + m * h;
}

Mat gin_layer_forward(const Mat& m, const Mat& h, const GinLayer& layer) {
  return mlp2_forward(gin_aggregate(m, h, layer.eps(0, 0)), layer.mlp);
}

Mat gin_forward(const Mat& m, const Mat& x, const GinBlock& gin) {
  return gin_layer_forward(m, gin_layer_forward(m, x, gin.l1), gin.l2);
}

GaussianEmbedding encode(const std::vector<Mat>& channel_adjacencies, const Mat& x_local,
                         const EncoderParams& params) {
  if (channel_adjacencies.size() != params.gins.size()) {
    fail(ErrorCode::shape, "channel count does not match encoder blocks");
  }
  Eigen::Index n = x_local.rows();
  std::vector<Mat> outs;
  outs.reserve(params.gins.size());
  for (std::size_t c = 0; c < params.gins.size(); ++c) {
    outs.push_back(gin_forward(channel_adjacencies[c], x_local, params.gins[c]));
  }
  Eigen::Index width = 0;
  for (const auto& o : outs) width += o.cols();
  Mat concat(n, width);
  Eigen::Index at = 0;
  for (const auto& o : outs) {
    concat.middleCols(at, o.cols()) = o;
    at += o.cols();
  }
  Eigen::RowVectorXd pooled = concat.colwise().mean();
  if (pooled.cols() != params.readout_w.rows()) fail(ErrorCode::shape, "readout width mismatch");
  Eigen::RowVectorXd proj = pooled * params.readout_w + params.readout_b.row(0);
  Eigen::Index d3 = proj.cols() / 2;
  GaussianEmbedding g;
  g.mu = proj.leftCols(d3).transpose();
  g.sigma = proj.rightCols(d3)
                .unaryExpr([](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); })
                .transpose();
  return g;
}

Vec reparameterize_with(const GaussianEmbedding& g, const Vec& eta) {
  if ((g.sigma.array() <= 0.0).any()) fail(ErrorCode::domain, "variance must be positive");
  if (eta.size() != g.mu.size()) fail(ErrorCode::shape, "noise width mismatch");
  return g.mu.array() + g.sigma.array().sqrt() * eta.array();
}

Vec reparameterize(const GaussianEmbedding& g, Rng& rng) {
  Vec eta(g.mu.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = rng.normal();
  return reparameterize_with(g, eta);
}

}  // namespace dgib
