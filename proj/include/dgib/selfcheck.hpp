#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgib/model.hpp"
#include "dgib/motifs.hpp"

namespace dgib {

// Exhaustive serial references, deliberately independent of the fast kernels:
// they walk all n*(n-1)*(n-2) ordered triples and compare induced matrices
// against the catalog entry one by one.
std::vector<std::array<int, 3>> match_instances_oracle(const DirectedGraph& g, int motif_index);
Mat motif_adjacency_oracle(const DirectedGraph& g, int motif_index);

// Monte-Carlo estimate of KL(N(mu, diag(sigma)) || N(0, I)).
double gaussian_kl_monte_carlo(const Vec& mu, const Vec& sigma, int n_samples, std::uint64_t seed);

// Random small directed test instance for gradient checks.
struct RandomInstance {
  JointGraph graph;
  LabeledPair pair;
};
RandomInstance random_instance(int n_nodes, int n_relations, double arc_prob, int d0, int d1,
                               std::uint64_t seed);

struct FdReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  long checked = 0;
};

// Central finite differences of the total loss against every analytic
// gradient entry (node features restricted to the pair's local rows).
FdReport check_model_gradients(const ModelState& state, const PairContext& ctx, int label,
                               const RunConfig& cfg, std::uint64_t noise_seed,
                               double step = 1e-5);

}  // namespace dgib
