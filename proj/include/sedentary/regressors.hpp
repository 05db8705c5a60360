#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sedentary/error.hpp"

namespace sedentary {

inline constexpr double kRidgeFallbackLambda = 1e-6;

struct LinearRegressor {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  bool used_ridge = false;

  double predict(const Eigen::VectorXd& x) const {
    if (x.size() != coefficients.size())
      throw DomainError("regressor expects dimension " + std::to_string(coefficients.size()));
    return coefficients.dot(x) + intercept;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    if (X.cols() != coefficients.size())
      throw DomainError("regressor expects dimension " + std::to_string(coefficients.size()));
    return (X * coefficients).array() + intercept;
  }
};

// Least squares with an unpenalized intercept. Underdetermined or
// rank-deficient designs fall back to ridge (lambda = 1e-6 unless given) on
// the centered problem.
inline LinearRegressor ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               double ridge_lambda = kRidgeFallbackLambda) {
  if (X.rows() != y.size()) throw DomainError("ols_fit: X and y sizes differ");
  if (X.rows() == 0) throw DomainError("ols_fit: empty training set");
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  const auto d = X.cols();

  LinearRegressor r;
  bool full_rank = false;
  if (X.rows() >= d + 1 && d > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    full_rank = qr.rank() == d;
    if (full_rank) r.coefficients = qr.solve(yc);
  }
  if (d == 0) {
    r.coefficients = Eigen::VectorXd(0);
  } else if (!full_rank) {
    Eigen::MatrixXd a = xc.transpose() * xc;
    a.diagonal().array() += ridge_lambda;
    r.coefficients = a.ldlt().solve(xc.transpose() * yc);
    r.used_ridge = true;
  }
  r.intercept = y_mean - x_mean.dot(r.coefficients);
  return r;
}

struct MeanBaseline {
  double mean = 0.0;
  double predict() const { return mean; }
  template <typename Input>
  double predict(const Input&) const {
    return mean;
  }
};

inline MeanBaseline mean_fit(const Eigen::VectorXd& targets) {
  if (targets.size() == 0) throw DomainError("mean_fit: empty training set");
  return {targets.mean()};
}

inline double mean_predict(const MeanBaseline& b) { return b.mean; }

}  // namespace sedentary
