#include "dgib/objective.hpp"

#include <Eigen/LU>

#include <cmath>

namespace dgib {

double gaussian_kl(const Vec& mu, const Vec& sigma_diag) {
  if (mu.size() != sigma_diag.size()) fail(ErrorCode::shape, "mu and sigma widths differ");
  if ((sigma_diag.array() <= 0.0).any()) fail(ErrorCode::domain, "variance must be positive");
  double d = static_cast<double>(mu.size());
  return 0.5 * (sigma_diag.sum() + mu.squaredNorm() - d - sigma_diag.array().log().sum());
}

double binary_ce(double logit, int label) {
  if (label != 0 && label != 1) fail(ErrorCode::domain, "label must be 0 or 1");
  return std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) -
         logit * static_cast<double>(label);
}

double gram_det(const Mat& u) {
  Mat gram = u * u.transpose();
  return gram.determinant();
}

LossBreakdown dgib_loss(const std::vector<double>& logits, int label,
                        const std::vector<Vec>& mus, const std::vector<Vec>& sigmas,
                        const Mat& z_rows, const DgibConfig& config) {
  auto k = static_cast<std::size_t>(config.K);
  if (config.K < 1) fail(ErrorCode::config, "K must be >= 1");
  if (logits.size() != k || mus.size() != k || sigmas.size() != k ||
      z_rows.rows() != static_cast<Eigen::Index>(k)) {
    fail(ErrorCode::config, "per-k inputs do not match K");
  }
  LossBreakdown out;
  for (std::size_t i = 0; i < k; ++i) {
    out.ce += binary_ce(logits[i], label);
    out.kl += gaussian_kl(mus[i], sigmas[i]);
  }
  out.ce /= static_cast<double>(k);
  out.kl /= static_cast<double>(k);
  out.dpp = gram_det(z_rows);
  out.total = out.ce + config.beta1 * out.kl - config.beta2 * out.dpp;
  if (!std::isfinite(out.total)) fail(ErrorCode::numeric, "non-finite loss");
  return out;
}

}  // namespace dgib
