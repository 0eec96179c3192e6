#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "dgib/types.hpp"

namespace dgib {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One per-gene ranking query: candidates ordered by descending confidence,
// ties broken by ascending entity id.
struct RankingTask {
  EntityId query = -1;
  std::vector<EntityId> ranked;     // candidate partners, best first
  std::vector<EntityId> relevant;   // partners with label 1
  int cutoff = 10;
};

// Gain 1 per relevant item, discount 1/log2(rank+1), ideal DCG truncated at
// min(cutoff, |relevant|). Empty relevant set scores 0.
double ndcg_at(const RankingTask& task);

// (hits/C, hits/|relevant|); |relevant| must be > 0.
std::pair<double, double> precision_recall_at(const RankingTask& task);

double average_precision_at(const RankingTask& task);

// Mean AP over queries with a nonempty relevant set; error if none qualify.
double map_at(const std::vector<RankingTask>& tasks);

// Gini concentration of |w|; 0 for uniform, (n-1)/n for one-hot.
double sparseness(const std::vector<double>& w);

// Expected squared gap between the explanation's predicted effect of a
// gate perturbation and the model's actual output change:
//   E[ (I.w - (f(g) - f(clamp01(g - I))))^2 ],  I ~ N(0, sigma^2) per edge.
double infidelity(const std::function<double(const Vec&)>& model_fn, const Vec& baseline_gates,
                  const Vec& importance, double sigma, int n_draws, std::uint64_t seed);

// Diversity of K representations; delegates to the Gram determinant.
double dpp_diversity(const Mat& z_rows);

// Builds per-gene tasks from a labeled pair split and the pair confidences
// keyed by unordered (min,max) entity pair. Queries without a positive
// partner are skipped.
std::vector<RankingTask> build_ranking_tasks(
    const std::vector<LabeledPair>& pairs,
    const std::map<std::pair<EntityId, EntityId>, double>& confidence, int cutoff);

}  // namespace dgib
