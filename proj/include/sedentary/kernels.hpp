#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "sedentary/error.hpp"
#include "sedentary/linalg.hpp"

namespace sedentary {

// s2 * exp(-|a - b|^2 / (2 l^2))
inline double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lengthscale,
                         double signal_variance) {
  if (a.size() != b.size())
    throw DomainError("rbf_kernel: dimension mismatch " + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  if (!(lengthscale > 0.0)) throw DomainError("rbf_kernel: lengthscale must be positive");
  return signal_variance * std::exp(-(a - b).squaredNorm() / (2.0 * lengthscale * lengthscale));
}

// Unit-variance RBF correlations between the rows of `a` and `b`.
inline Eigen::MatrixXd rbf_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       double lengthscale) {
  if (a.cols() != b.cols()) throw DomainError("rbf_correlation: dimension mismatch");
  return (squared_distances(a, b) * (-0.5 / (lengthscale * lengthscale))).array().exp().matrix();
}

inline Eigen::MatrixXd rbf_correlation(const Eigen::MatrixXd& a, double lengthscale) {
  return (squared_distances(a) * (-0.5 / (lengthscale * lengthscale))).array().exp().matrix();
}

}  // namespace sedentary
