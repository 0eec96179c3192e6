#include "dgib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dgib/objective.hpp"
#include "dgib/rng.hpp"

namespace dgib {

double ndcg_at(const RankingTask& task) {
  if (task.cutoff < 1) fail(ErrorCode::domain, "cutoff must be >= 1");
  if (task.relevant.empty()) return 0.0;
  std::set<EntityId> rel(task.relevant.begin(), task.relevant.end());
  double dcg = 0.0;
  int limit = std::min<int>(task.cutoff, static_cast<int>(task.ranked.size()));
  for (int r = 1; r <= limit; ++r) {
    if (rel.count(task.ranked[static_cast<std::size_t>(r - 1)])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
    }
  }
  int ideal = std::min<int>(task.cutoff, static_cast<int>(rel.size()));
  double idcg = 0.0;
  for (int r = 1; r <= ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::pair<double, double> precision_recall_at(const RankingTask& task) {
  if (task.cutoff < 1) fail(ErrorCode::domain, "cutoff must be >= 1");
  if (task.relevant.empty()) fail(ErrorCode::domain, "recall undefined without relevant items");
  std::set<EntityId> rel(task.relevant.begin(), task.relevant.end());
  int hits = 0;
  int limit = std::min<int>(task.cutoff, static_cast<int>(task.ranked.size()));
  for (int r = 0; r < limit; ++r) {
    if (rel.count(task.ranked[static_cast<std::size_t>(r)])) ++hits;
  }
  return {static_cast<double>(hits) / static_cast<double>(task.cutoff),
          static_cast<double>(hits) / static_cast<double>(rel.size())};
}

double average_precision_at(const RankingTask& task) {
  if (task.relevant.empty()) fail(ErrorCode::domain, "AP undefined without relevant items");
  std::set<EntityId> rel(task.relevant.begin(), task.relevant.end());
  int hits = 0;
  double acc = 0.0;
  int limit = std::min<int>(task.cutoff, static_cast<int>(task.ranked.size()));
  for (int r = 1; r <= limit; ++r) {
    if (rel.count(task.ranked[static_cast<std::size_t>(r - 1)])) {
      ++hits;
      acc += static_cast<double>(hits) / static_cast<double>(r);
    }
  }
  int denom = std::min<int>(task.cutoff, static_cast<int>(rel.size()));
  return acc / static_cast<double>(denom);
}

double map_at(const std::vector<RankingTask>& tasks) {
  double acc = 0.0;
  int counted = 0;
  for (const auto& t : tasks) {
    if (t.relevant.empty()) continue;
    acc += average_precision_at(t);
    ++counted;
  }
  if (counted == 0) fail(ErrorCode::domain, "MAP over queries with no relevant items");
  return acc / static_cast<double>(counted);
}

double sparseness(const std::vector<double>& w) {
  if (w.empty()) fail(ErrorCode::domain, "empty importance vector");
  std::vector<double> abs(w.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    abs[i] = std::abs(w[i]);
    total += abs[i];
  }
  if (total <= 0.0) fail(ErrorCode::domain, "importance vector sums to zero");
  std::sort(abs.begin(), abs.end());
  double n = static_cast<double>(abs.size());
  double acc = 0.0;
  for (std::size_t k = 1; k <= abs.size(); ++k) {
    acc += (2.0 * static_cast<double>(k) - n - 1.0) * abs[k - 1];
  }
  return acc / (n * total);
}

double infidelity(const std::function<double(const Vec&)>& model_fn, const Vec& baseline_gates,
                  const Vec& importance, double sigma, int n_draws, std::uint64_t seed) {
  if (sigma <= 0.0) fail(ErrorCode::domain, "perturbation sigma must be > 0");
  if (n_draws < 1) fail(ErrorCode::domain, "need at least one draw");
  if (baseline_gates.size() != importance.size()) fail(ErrorCode::shape, "importance length mismatch");
  double f0 = model_fn(baseline_gates);
  Rng rng(mix_seed(seed, 0x1f1d));
  double acc = 0.0;
  Vec noise(baseline_gates.size());
  for (int d = 0; d < n_draws; ++d) {
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = sigma * rng.normal();
    Vec perturbed = (baseline_gates - noise).cwiseMax(0.0).cwiseMin(1.0);
    double predicted = noise.dot(importance);
    double actual = f0 - model_fn(perturbed);
    acc += (predicted - actual) * (predicted - actual);
  }
  return acc / static_cast<double>(n_draws);
}

double dpp_diversity(const Mat& z_rows) { return gram_det(z_rows); }

std::vector<RankingTask> build_ranking_tasks(
    const std::vector<LabeledPair>& pairs,
    const std::map<std::pair<EntityId, EntityId>, double>& confidence, int cutoff) {
  std::map<EntityId, std::vector<std::pair<EntityId, double>>> by_gene;
  std::map<EntityId, std::set<EntityId>> relevant;
  for (const auto& p : pairs) {
    auto key = std::make_pair(std::min(p.u, p.v), std::max(p.u, p.v));
    auto it = confidence.find(key);
    if (it == confidence.end()) {
      fail(ErrorCode::data, "missing confidence for a pair in the evaluation split");
    }
    by_gene[p.u].emplace_back(p.v, it->second);
    by_gene[p.v].emplace_back(p.u, it->second);
    if (p.label == 1) {
      relevant[p.u].insert(p.v);
      relevant[p.v].insert(p.u);
    }
  }
  std::vector<RankingTask> tasks;
  for (auto& [gene, cands] : by_gene) {
    auto rel_it = relevant.find(gene);
    if (rel_it == relevant.end() || rel_it->second.empty()) continue;  // skipped query
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;  // ties by ascending entity id
    });
    RankingTask t;
    t.query = gene;
    t.cutoff = cutoff;
    for (const auto& [cand, conf] : cands) t.ranked.push_back(cand);
    t.relevant.assign(rel_it->second.begin(), rel_it->second.end());
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace dgib
