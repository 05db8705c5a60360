#pragma once

#include <Eigen/Dense>

#include "sedentary/gp.hpp"
#include "sedentary/linalg.hpp"

namespace sedentary {

// Posterior over a base training set (already factored) plus a handful of
// extra points, computed by block elimination so the base factor is reused:
//   [S_aa S_ab; S_ba S_bb] = [L_a 0; V^T L_b][L_a^T V; 0 L_b^T]
// with V = L_a^{-1} S_ab and L_b = chol(S_bb - V^T V).
class AugmentedPosterior {
 public:
  // base: factor of S_aa; base_residual: y_a - c.
  AugmentedPosterior(const JitteredCholesky& base, const Eigen::VectorXd& base_whitened,
                     const Eigen::MatrixXd& cross, const Eigen::MatrixXd& extra_cov,
                     const Eigen::VectorXd& extra_residual, double jitter_scale)
      : base_(&base), z_a_(&base_whitened) {
    v_ = base.lower.triangularView<Eigen::Lower>().solve(cross);
    if (extra_cov.rows() > 0) {
      const Eigen::MatrixXd schur = extra_cov - v_.transpose() * v_;
      extra_ = jittered_cholesky(0.5 * (schur + schur.transpose()), jitter_scale);
      z_b_ = extra_.lower.triangularView<Eigen::Lower>().solve(extra_residual -
                                                                v_.transpose() * base_whitened);
    }
  }

  // L_a^{-1} (y_a - c), computed once per base.
  static Eigen::VectorXd whiten(const JitteredCholesky& base, const Eigen::VectorXd& residual) {
    return base.lower.triangularView<Eigen::Lower>().solve(residual);
  }

  // k_a / k_b: covariances of the test point with base / extra points;
  // prior: its prior variance.
  Prediction predict(const Eigen::VectorXd& k_a, const Eigen::VectorXd& k_b, double prior,
                     double mean_constant) const {
    const Eigen::VectorXd w_a = base_->lower.triangularView<Eigen::Lower>().solve(k_a);
    Prediction p;
    p.mean = mean_constant + w_a.dot(*z_a_);
    double explained = w_a.squaredNorm();
    if (k_b.size() > 0) {
      const Eigen::VectorXd w_b =
          extra_.lower.triangularView<Eigen::Lower>().solve(k_b - v_.transpose() * w_a);
      p.mean += w_b.dot(z_b_);
      explained += w_b.squaredNorm();
    }
    p.variance = clamp_variance(prior - explained, prior);
    return p;
  }

 private:
  const JitteredCholesky* base_;
  const Eigen::VectorXd* z_a_;
  Eigen::MatrixXd v_;
  JitteredCholesky extra_;
  Eigen::VectorXd z_b_;
};

}  // namespace sedentary
