#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "sedentary/error.hpp"

namespace sedentary {

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error("E_NUMERIC", what) {}
};

struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // amount added to the diagonal before factoring

  Eigen::Index size() const { return lower.rows(); }

  // log det of the factored (jittered) matrix
  double log_determinant() const { return 2.0 * lower.diagonal().array().log().sum(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = lower.triangularView<Eigen::Lower>().solve(b);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  Eigen::MatrixXd inverse() const {
    Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(size(), size());
    lower.triangularView<Eigen::Lower>().solveInPlace(inv);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
    return inv;
  }
};

// Factors `a` as is; on failure retries with scale*1e-8 added to the diagonal,
// growing tenfold up to scale*1e-4.
inline JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a, double scale) {
  const auto attempt = [](const Eigen::MatrixXd& m, JitteredCholesky& out) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return false;
    out.lower = llt.matrixL();
    const auto d = out.lower.diagonal().array();
    return d.isFinite().all() && (d > 0.0).all();
  };
  JitteredCholesky out;
  if (a.size() > 0 && !a.allFinite())
    throw NumericalError("covariance matrix has non-finite entries");
  if (attempt(a, out)) return out;
  scale = std::abs(scale) > 0.0 ? std::abs(scale) : 1.0;
  for (double j = 1e-8; j <= 1e-4 * (1.0 + 1e-9); j *= 10.0) {
    Eigen::MatrixXd m = a;
    m.diagonal().array() += j * scale;
    if (attempt(m, out)) {
      out.jitter = j * scale;
      return out;
    }
  }
  throw NumericalError("Cholesky failed even with jitter 1e-4 * " + std::to_string(scale));
}

// Pairwise squared Euclidean distances between rows.
inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * a * b.transpose()).colwise() + na;
  d.rowwise() += nb.transpose();
  return d.cwiseMax(0.0);
}

inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd d = squared_distances(a, a);
  d.diagonal().setZero();
  return d;
}

}  // namespace sedentary
