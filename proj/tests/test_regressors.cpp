#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sedentary/regressors.hpp"

using namespace sedentary;

TEST(OlsFit, ExactLinearData) {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  const auto r = ols_fit(X, Eigen::Vector3d(2, 4, 6));
  EXPECT_NEAR(r.coefficients[0], 2.0, 1e-10);
  EXPECT_NEAR(r.intercept, 0.0, 1e-10);
  EXPECT_FALSE(r.used_ridge);
}

TEST(OlsFit, ConstantTargets) {
  std::mt19937_64 gen(1);
  const auto r = ols_fit(oracle::random_matrix(gen, 6, 2), Eigen::VectorXd::Constant(6, 5.0));
  EXPECT_NEAR(r.coefficients.norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.intercept, 5.0, 1e-12);
}

TEST(OlsFit, MatchesNormalEquations) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd X = oracle::random_matrix(gen, 10, 3);
    const Eigen::VectorXd y = oracle::random_matrix(gen, 10, 1).col(0);
    const auto r = ols_fit(X, y);
    const Eigen::VectorXd b = oracle::ols_normal_equations(X, y);
    EXPECT_NEAR(r.intercept, b[0], 1e-8);
    EXPECT_LE((r.coefficients - b.tail(3)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(OlsFit, UnderdeterminedUsesRidge) {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd X = oracle::random_matrix(gen, 3, 5);
  const Eigen::VectorXd y = oracle::random_matrix(gen, 3, 1).col(0);
  const auto r = ols_fit(X, y);
  EXPECT_TRUE(r.used_ridge);
  EXPECT_TRUE(r.coefficients.allFinite());
  // tiny ridge nearly interpolates
  EXPECT_LE((r.predict(X) - y).cwiseAbs().maxCoeff(), 1e-4);

  // the ridge solution is the penalized normal-equations solution on centered data
  const double lambda = 0.7;
  const auto rr = ols_fit(X, y, lambda);
  const Eigen::MatrixXd xc = X.rowwise() - X.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd beta =
      (xc.transpose() * xc + lambda * Eigen::MatrixXd::Identity(5, 5)).fullPivLu().solve(xc.transpose() * yc);
  EXPECT_LE((rr.coefficients - beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(OlsFit, RankDeficientColumnsUseRidge) {
  std::mt19937_64 gen(4);
  Eigen::MatrixXd X = oracle::random_matrix(gen, 8, 3);
  X.col(2) = X.col(0) * 2.0;
  const auto r = ols_fit(X, X.col(1));
  EXPECT_TRUE(r.used_ridge);
  EXPECT_LE((r.predict(X) - X.col(1)).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_THROW(ols_fit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), DomainError);
  EXPECT_THROW(r.predict(Eigen::VectorXd(Eigen::VectorXd::Zero(2))), DomainError);
}

TEST(OlsFit, SingleRow) {
  const auto r = ols_fit(Eigen::MatrixXd::Ones(1, 4), Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_NEAR(r.predict(Eigen::VectorXd(Eigen::VectorXd::Ones(4))), 3.0, 1e-12);
}

TEST(MeanBaseline, PredictsTrainingAverage) {
  const auto b = mean_fit(Eigen::Vector3d(2, 4, 6));
  EXPECT_EQ(mean_predict(b), 4.0);
  EXPECT_EQ(b.predict(Eigen::VectorXd::Zero(24)), 4.0);
  EXPECT_EQ(mean_predict(mean_fit(Eigen::VectorXd::Constant(1, 5.0))), 5.0);
  EXPECT_THROW(mean_fit(Eigen::VectorXd(0)), DomainError);
  std::mt19937_64 gen(5);
  const Eigen::VectorXd y = oracle::random_matrix(gen, 1000, 1).col(0);
  double sum = 0.0;
  for (double v : y) sum += v;
  EXPECT_NEAR(mean_predict(mean_fit(y)), sum / 1000.0, 1e-12);
}
