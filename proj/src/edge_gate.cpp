#include "dgib/edge_gate.hpp"

#include <algorithm>
#include <cmath>

#include "dgib/rng.hpp"

namespace dgib {

Vec score_edges_raw(const EnclosingGraph& eg, const Mat& node_features,
                    const Mat& relation_features, const GatePair& params) {
  if (params.w_node.rows() != node_features.cols()) {
    fail(ErrorCode::shape, "gate w_node rows must equal d0");
  }
  if (params.w_rel.rows() != relation_features.cols()) {
    fail(ErrorCode::shape, "gate w_rel rows must equal d1");
  }
  if (params.w_node.cols() != params.w_rel.cols()) {
    fail(ErrorCode::shape, "gate projections must share d2");
  }
  Vec raw(static_cast<Eigen::Index>(eg.edges.size()));
  for (std::size_t e = 0; e < eg.edges.size(); ++e) {
    const auto& edge = eg.edges[e];
    Eigen::RowVectorXd xi = node_features.row(eg.nodes[static_cast<std::size_t>(edge.head)]);
    Eigen::RowVectorXd xj = node_features.row(eg.nodes[static_cast<std::size_t>(edge.tail)]);
    Eigen::RowVectorXd er = relation_features.row(edge.relation);
    Eigen::RowVectorXd a = xj * params.w_node;
    Eigen::RowVectorXd b = (xi * params.w_node + er * params.w_rel).array().tanh();
    raw(static_cast<Eigen::Index>(e)) = a.dot(b);
  }
  return raw;
}

Vec score_edges(const EnclosingGraph& eg, const Mat& node_features,
                const Mat& relation_features, const GatePair& params) {
  Vec raw = score_edges_raw(eg, node_features, relation_features, params);
  return raw.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Vec relax_sample(const Vec& scores, const Vec& eps, double tau) {
  if (tau <= 0.0) fail(ErrorCode::domain, "temperature must be positive");
  if (scores.size() != eps.size()) fail(ErrorCode::shape, "noise length mismatch");
  constexpr double kLo = 1e-6;
  constexpr double kHi = 1.0 - 1e-6;
  Vec out(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    double b = std::clamp(scores[i], kLo, kHi);
    double e = std::clamp(eps[i], kLo, kHi);
    double z = (std::log(b / (1.0 - b)) + std::log(e / (1.0 - e))) / tau;
    out[i] = 1.0 / (1.0 + std::exp(-z));
  }
  return out;
}

Vec relax_sample(const Vec& scores, double tau, Rng& rng) {
  Vec eps(scores.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.uniform();
  return relax_sample(scores, eps, tau);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

HardExplanation hard_threshold(const Vec& scores) {
  HardExplanation out;
  if (scores.size() == 0) return out;  // empty support -> empty explanation
  std::vector<double> values(scores.data(), scores.data() + scores.size());
  out.threshold = median(std::move(values));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores[i] > out.threshold) out.kept_edges.push_back(static_cast<int>(i));
  }
  return out;
}

HardExplanation hard_threshold(const Vec& scores, double threshold) {
  HardExplanation out;
  out.threshold = threshold;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores[i] > threshold) out.kept_edges.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace dgib
