#pragma once

#include <Eigen/Core>
#include <vector>

#include "dgib/types.hpp"

namespace dgib {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct DgibConfig {
  double beta1 = 1e-4;
  double beta2 = 1e-4;
  int K = 3;
};

struct LossBreakdown {
  double ce = 0.0;     // mean cross-entropy over k
  double kl = 0.0;     // mean KL over k
  double dpp = 0.0;    // det of the K-representation Gram matrix
  double total = 0.0;  // ce + beta1 * kl - beta2 * dpp
};

// KL(N(mu, diag(sigma)) || N(0, I)) = 0.5 (sum sigma + |mu|^2 - d - sum log sigma).
double gaussian_kl(const Vec& mu, const Vec& sigma_diag);

// Stable -[y log s(x) + (1-y) log(1 - s(x))].
double binary_ce(double logit, int label);

// det(U U^T) with representation k as row k of u. Zero for singular Grams.
double gram_det(const Mat& u);

LossBreakdown dgib_loss(const std::vector<double>& logits, int label,
                        const std::vector<Vec>& mus, const std::vector<Vec>& sigmas,
                        const Mat& z_rows, const DgibConfig& config);

}  // namespace dgib
