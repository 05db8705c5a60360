#pragma once

// Reference implementations used only by the tests. They follow the textbook
// formulas as literally as possible (explicit inverses, explicit Kronecker
// products, exhaustive path search) and share no code with the library.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline Eigen::MatrixXd rbf(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double l, double s2) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) d2 += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
      k(i, j) = s2 * std::exp(-d2 / (2.0 * l * l));
    }
  return k;
}

struct Posterior {
  double mean;
  double variance;
};

// Dense GP posterior with an explicit inverse.
inline Posterior gp_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l, double s2,
                            double noise, double c, const Eigen::VectorXd& xs) {
  Eigen::MatrixXd k = rbf(X, X, l, s2) + noise * Eigen::MatrixXd::Identity(X.rows(), X.rows());
  const Eigen::MatrixXd kinv = k.fullPivLu().inverse();
  const Eigen::VectorXd ks = rbf(X, xs.transpose(), l, s2).col(0);
  const Eigen::VectorXd r = y.array() - c;
  return {c + ks.dot(kinv * r), s2 - ks.dot(kinv * ks)};
}

inline double gaussian_loglik(const Eigen::MatrixXd& cov, const Eigen::VectorXd& r) {
  const Eigen::MatrixXd inv = cov.fullPivLu().inverse();
  const double det = cov.fullPivLu().determinant();
  return -0.5 * r.dot(inv * r) - 0.5 * std::log(det) -
         0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi);
}

inline double gp_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l, double s2,
                              double noise, double c) {
  const Eigen::MatrixXd k = rbf(X, X, l, s2) + noise * Eigen::MatrixXd::Identity(X.rows(), X.rows());
  return gaussian_loglik(k, (y.array() - c).matrix());
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Minimum over every monotone warping path, by exhaustive depth-first search.
// Partial paths already costlier than the best complete one are abandoned,
// which is exact because step costs are non-negative.
inline double dtw_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int, double)> walk = [&](int i, int j, double cost) {
    cost += std::abs(a[i] - b[j]);
    if (cost >= best) return;
    if (i == n - 1 && j == m - 1) {
      best = cost;
      return;
    }
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, cost);
    if (i + 1 < n) walk(i + 1, j, cost);
    if (j + 1 < m) walk(i, j + 1, cost);
  };
  walk(0, 0, 0.0);
  return best;
}

// OLS with intercept from the normal equations (A^T A) b = A^T y.
inline Eigen::VectorXd ols_normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::MatrixXd a(X.rows(), X.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(X.cols()) = X;
  return (a.transpose() * a).fullPivLu().solve(a.transpose() * y);
}

// Central finite difference of f along each coordinate.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

}  // namespace oracle
