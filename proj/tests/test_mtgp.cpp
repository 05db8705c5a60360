#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sedentary/gp.hpp"
#include "sedentary/mtgp.hpp"

using namespace sedentary;

namespace {

struct Instance {
  std::vector<Eigen::MatrixXd> xs;
  std::vector<Eigen::VectorXd> ys;
  TaskSet data;
};

Instance random_instance(std::mt19937_64& gen, int m, int max_n, int dim, bool allow_empty = true) {
  std::uniform_int_distribution<int> nd(allow_empty ? 0 : 1, max_n);
  Instance inst;
  for (int l = 0; l < m; ++l) {
    const int n = (l == 0) ? std::max(1, nd(gen)) : nd(gen);
    inst.xs.push_back(oracle::random_matrix(gen, n, dim));
    inst.ys.push_back(oracle::random_matrix(gen, n, 1).col(0));
  }
  inst.data = TaskSet::from_tasks(inst.xs, inst.ys);
  return inst;
}

MTGPHyperparams random_hyper(std::mt19937_64& gen, int m) {
  std::uniform_real_distribution<double> u(0.3, 1.5);
  MTGPHyperparams h;
  h.lengthscale = u(gen);
  h.task_chol = oracle::random_matrix(gen, m, m).triangularView<Eigen::Lower>();
  for (int l = 0; l < m; ++l) h.task_chol(l, l) = u(gen);
  h.task_noises = Eigen::VectorXd(m);
  for (int l = 0; l < m; ++l) h.task_noises[l] = 0.1 * u(gen);
  h.mean_constant = 0.2;
  return h;
}

// Dense oracle covariance over (task, point) pairs straight from the definition.
Eigen::MatrixXd oracle_sigma(const MTGPHyperparams& h, const Instance& inst) {
  const Eigen::MatrixXd kf = h.task_covariance();
  const Eigen::Index n = inst.data.size();
  Eigen::MatrixXd s(n, n);
  Eigen::Index i = 0;
  for (std::size_t l = 0; l < inst.xs.size(); ++l)
    for (Eigen::Index p = 0; p < inst.xs[l].rows(); ++p, ++i) {
      Eigen::Index j = 0;
      for (std::size_t m = 0; m < inst.xs.size(); ++m)
        for (Eigen::Index q = 0; q < inst.xs[m].rows(); ++q, ++j) {
          s(i, j) = kf(l, m) * oracle::rbf(inst.xs[l].row(p), inst.xs[m].row(q), h.lengthscale, 1.0)(0, 0);
          if (i == j) s(i, j) += h.task_noises[l];
        }
    }
  return s;
}

}  // namespace

TEST(AssembleSigma, SharedGridEqualsKroneckerExpansion) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 4, n = 1 + trial % 6;
    const Eigen::MatrixXd grid = oracle::random_matrix(gen, n, 3);
    std::vector<Eigen::MatrixXd> xs(m, grid);
    std::vector<Eigen::VectorXd> ys(m, Eigen::VectorXd::Zero(n));
    const auto data = TaskSet::from_tasks(xs, ys);
    const auto h = random_hyper(gen, m);
    const Eigen::MatrixXd kx = oracle::rbf(grid, grid, h.lengthscale, 1.0);
    const Eigen::MatrixXd d = h.task_noises.asDiagonal();
    const Eigen::MatrixXd expected =
        oracle::kron(h.task_covariance(), kx) + oracle::kron(d, Eigen::MatrixXd::Identity(n, n));
    EXPECT_LE((assemble_sigma(h, data) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AssembleSigma, RaggedMatchesEntrywiseDefinition) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(gen, 3, 5, 2);
    const auto h = random_hyper(gen, 3);
    EXPECT_LE((assemble_sigma(h, inst.data) - oracle_sigma(h, inst)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AssembleSigma, SingleTaskAndIdentityStructure) {
  std::mt19937_64 gen(3);
  const auto one = random_instance(gen, 1, 5, 2, false);
  auto h = random_hyper(gen, 1);
  Eigen::MatrixXd expected = h.task_covariance()(0, 0) * oracle::rbf(one.xs[0], one.xs[0], h.lengthscale, 1.0);
  expected.diagonal().array() += h.task_noises[0];
  EXPECT_LE((assemble_sigma(h, one.data) - expected).cwiseAbs().maxCoeff(), 1e-12);

  const auto two = random_instance(gen, 2, 4, 2, false);
  auto hi = random_hyper(gen, 2);
  hi.task_chol = Eigen::MatrixXd::Identity(2, 2);
  const auto s = assemble_sigma(hi, two.data);
  const auto n0 = two.xs[0].rows();
  EXPECT_TRUE(s.topRightCorner(n0, s.cols() - n0).isZero(0.0));

  EXPECT_THROW(assemble_sigma(random_hyper(gen, 3), two.data), DomainError);
}

TEST(MTGPLikelihood, MatchesDenseOracle) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(gen, 3, 5, 2);
    const auto h = random_hyper(gen, 3);
    const auto r = (inst.data.y.array() - h.mean_constant).matrix();
    EXPECT_NEAR(mtgp_likelihood(h, inst.data, false).value,
                oracle::gaussian_loglik(oracle_sigma(h, inst), r), 1e-8);
    EXPECT_NEAR(MTGPModel::condition(h, inst.data).log_marginal_likelihood(),
                oracle::gaussian_loglik(oracle_sigma(h, inst), r), 1e-8);
  }
}

TEST(MTGPPredict, DiagonalTaskCovarianceEqualsIndependentGPs) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 4;
    const auto inst = random_instance(gen, m, 6, 2, false);
    auto h = random_hyper(gen, m);
    h.task_chol = Eigen::MatrixXd(Eigen::VectorXd(h.task_chol.diagonal()).asDiagonal());
    const MTGPModel model = MTGPModel::condition(h, inst.data);
    const Eigen::VectorXd xs = oracle::random_matrix(gen, 2, 1).col(0);
    for (int i = 0; i < m; ++i) {
      GPHyperparams g;
      g.lengthscale = h.lengthscale;
      g.signal_variance = h.task_covariance()(i, i);
      g.noise_variance = h.task_noises[i];
      g.mean_constant = h.mean_constant;
      const auto single = GPModel::condition(g, inst.xs[i], inst.ys[i]).predict(xs);
      const auto multi = model.predict(i, xs);
      EXPECT_NEAR(multi.mean, single.mean, 1e-6);
      EXPECT_NEAR(multi.variance, single.variance + g.noise_variance, 1e-6);
    }
  }
}

TEST(MTGPPredict, RankOneTaskCovarianceEqualsPooledGP) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 4;
    const auto inst = random_instance(gen, m, 6, 2, false);
    auto h = random_hyper(gen, m);
    const double lambda = 0.5 + 0.1 * trial;
    h.task_chol = Eigen::MatrixXd::Zero(m, m);
    h.task_chol.col(0).setConstant(std::sqrt(lambda));
    h.task_noises.setConstant(0.15);
    GPHyperparams g;
    g.lengthscale = h.lengthscale;
    g.signal_variance = lambda;
    g.noise_variance = 0.15;
    g.mean_constant = h.mean_constant;
    const GPModel pooled = GPModel::condition(g, inst.data.x, inst.data.y);
    const MTGPModel model = MTGPModel::condition(h, inst.data);
    const Eigen::VectorXd xs = oracle::random_matrix(gen, 2, 1).col(0);
    for (int i = 0; i < m; ++i) {
      EXPECT_NEAR(model.predict(i, xs).mean, pooled.predict(xs).mean, 1e-6);
      EXPECT_NEAR(model.predict(i, xs).variance, pooled.predict(xs).variance + 0.15, 1e-6);
    }
  }
}

TEST(MTGPPredict, InterpolatesWithoutNoise) {
  std::mt19937_64 gen(7);
  const auto inst = random_instance(gen, 2, 4, 2, false);
  auto h = random_hyper(gen, 2);
  h.task_noises.setZero();
  const MTGPModel model = MTGPModel::condition(h, inst.data);
  for (int l = 0; l < 2; ++l)
    for (Eigen::Index p = 0; p < inst.xs[l].rows(); ++p)
      EXPECT_NEAR(model.predict(l, inst.xs[l].row(p).transpose()).mean, inst.ys[l][p], 1e-6);
  EXPECT_THROW(model.predict(2, inst.xs[0].row(0).transpose()), DomainError);
  EXPECT_THROW(model.predict(-1, inst.xs[0].row(0).transpose()), DomainError);
}

TEST(MTGPPredict, VarianceBoundedByPrior) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(gen, 3, 5, 2);
    const auto h = random_hyper(gen, 3);
    const MTGPModel model = MTGPModel::condition(h, inst.data);
    const Eigen::VectorXd xs = oracle::random_matrix(gen, 2, 1).col(0);
    for (int i = 0; i < 3; ++i) {
      const auto p = model.predict(i, xs);
      EXPECT_GE(p.variance, 0.0);
      EXPECT_LE(p.variance, h.task_covariance()(i, i) + h.task_noises[i] + 1e-12);
    }
  }
}

TEST(MTGPLikelihood, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(9);
  const int m = 3;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::MatrixXd> xs;
    std::vector<Eigen::VectorXd> ys;
    for (int l = 0; l < m; ++l) {
      xs.push_back(oracle::random_matrix(gen, 4, 2));
      ys.push_back(oracle::random_matrix(gen, 4, 1).col(0));
    }
    const auto data = TaskSet::from_tasks(xs, ys);
    const auto base = random_hyper(gen, m);
    // theta = (log l, lower triangle of L column-major, log noises, c)
    const int n_chol = m * (m + 1) / 2;
    const auto unpack = [&](const Eigen::VectorXd& t) {
      MTGPHyperparams h = base;
      h.lengthscale = std::exp(t[0]);
      int k = 1;
      h.task_chol.setZero();
      for (int c = 0; c < m; ++c)
        for (int r = c; r < m; ++r) h.task_chol(r, c) = t[k++];
      for (int l = 0; l < m; ++l) h.task_noises[l] = std::exp(t[k++]);
      h.mean_constant = t[k];
      return h;
    };
    Eigen::VectorXd theta(2 + n_chol + m);
    theta[0] = std::log(base.lengthscale);
    int k = 1;
    for (int c = 0; c < m; ++c)
      for (int r = c; r < m; ++r) theta[k++] = base.task_chol(r, c);
    for (int l = 0; l < m; ++l) theta[k++] = std::log(base.task_noises[l]);
    theta[k] = base.mean_constant;

    const auto lik = mtgp_likelihood(unpack(theta), data);
    Eigen::VectorXd analytic(theta.size());
    analytic[0] = lik.d_log_lengthscale;
    k = 1;
    for (int c = 0; c < m; ++c)
      for (int r = c; r < m; ++r) analytic[k++] = lik.d_task_chol(r, c);
    for (int l = 0; l < m; ++l) analytic[k++] = lik.d_log_task_noises[l];
    analytic[k] = lik.d_mean_constant;
    const Eigen::VectorXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& t) { return mtgp_likelihood(unpack(t), data, false).value; }, theta);
    EXPECT_LE((analytic - fd).norm() / std::max(analytic.norm(), fd.norm()), 1e-4) << "trial " << trial;
  }
}

TEST(MTGPFit, SingleTaskReducesToGP) {
  std::mt19937_64 gen(10);
  const auto inst = random_instance(gen, 1, 8, 2, false);
  const auto h = [&] {
    MTGPHyperparams x = random_hyper(gen, 1);
    x.task_chol(0, 0) = 1.1;
    return x;
  }();
  GPHyperparams g;
  g.lengthscale = h.lengthscale;
  g.signal_variance = 1.21;
  g.noise_variance = h.task_noises[0];
  g.mean_constant = h.mean_constant;
  const Eigen::VectorXd xs = oracle::random_matrix(gen, 2, 1).col(0);
  EXPECT_NEAR(MTGPModel::condition(h, inst.data).predict(0, xs).mean,
              GPModel::condition(g, inst.xs[0], inst.ys[0]).predict(xs).mean, 1e-6);
}

TEST(MTGPFit, ImprovesObjectiveAndSwapSymmetric) {
  std::mt19937_64 gen(11);
  const Eigen::MatrixXd x = oracle::random_matrix(gen, 6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) y[i] = std::sin(2.0 * x(i, 0)) + x(i, 1);
  const auto data = TaskSet::from_tasks({x, x}, {y, y});
  MTGPFitConfig cfg;
  cfg.opt.max_iterations = 50;
  const auto init = default_mtgp_init(data, cfg);
  const MTGPModel fitted = mtgp_fit(data, cfg);
  const auto penalized = [&](const MTGPHyperparams& h) {
    return mtgp_likelihood(h, data, false).value +
           log_normal_density(h.mean_constant, h.mean_prior_mean, h.mean_prior_scale);
  };
  EXPECT_GT(penalized(fitted.hyperparams()), penalized(init));
  const auto& kf = fitted.task_covariance();
  EXPECT_NEAR(kf(0, 0), kf(1, 1), 1e-4 * kf(0, 0));
  EXPECT_TRUE((kf - kf.transpose()).isZero(1e-14));
  EXPECT_GE(fitted.hyperparams().task_noises.minCoeff(), cfg.noise_floor);
}

TEST(PopulationTask, ExtendedFactorIsExact) {
  std::mt19937_64 gen(12);
  for (int m = 1; m <= 4; ++m) {
    const auto h = random_hyper(gen, m);
    const auto e = extend_with_population_task(h);
    ASSERT_EQ(e.num_tasks(), m + 1);
    const Eigen::MatrixXd kf = h.task_covariance();
    const Eigen::MatrixXd ke = e.task_covariance();
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / m);
    EXPECT_TRUE(ke.topLeftCorner(m, m).isApprox(kf, 1e-14));
    EXPECT_TRUE(ke.row(m).head(m).transpose().isApprox(kf * u, 1e-12));
    EXPECT_NEAR(ke(m, m), kf.diagonal().mean(), 1e-12);
    EXPECT_NEAR(e.task_noises[m], h.task_noises.mean(), 1e-15);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ke).eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(TaskSet, EmptyTasksAllowedButDimensionsChecked) {
  const auto t = TaskSet::from_tasks({Eigen::MatrixXd(0, 2), Eigen::MatrixXd::Ones(2, 2)},
                                     {Eigen::VectorXd(0), Eigen::Vector2d(1, 2)});
  EXPECT_EQ(t.num_tasks, 2);
  EXPECT_EQ(t.size(), 2);
  EXPECT_EQ(t.task, (std::vector<int>{1, 1}));
  EXPECT_THROW(TaskSet::from_tasks({Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(1, 3)},
                                   {Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)}),
               DomainError);
}
