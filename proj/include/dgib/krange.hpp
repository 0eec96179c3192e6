#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "dgib/graph_store.hpp"
#include "dgib/motifs.hpp"

namespace dgib {

// Power iteration with uniform teleport; dangling mass is spread uniformly.
// Throws Error(numeric) with the residual when max_iter is exhausted.
Eigen::VectorXd pagerank(const DirectedGraph& g, double damping = 0.85, double tol = 1e-8,
                         int max_iter = 200);

// Linear-interpolation percentile of a sample (q in [0,100]).
double percentile(std::vector<double> values, double q);

struct CoreCountEstimate {
  Eigen::VectorXd scores;      // per local node
  std::vector<int> retained;   // local nodes with score >= the 90th percentile
  int component_count = 0;     // weakly connected components of the retained set
};

// PageRank scores on the collapsed enclosing graph, prune below the 90th
// percentile (ties at the threshold retained), count weak components.
CoreCountEstimate estimate_core_count(const EnclosingGraph& eg);

struct KRangeSummary {
  std::map<int, int> histogram;  // component count -> frequency
  int k_min = 0;
  int k_max = 0;
};

KRangeSummary krange_histogram(const std::vector<int>& component_counts);

}  // namespace dgib
