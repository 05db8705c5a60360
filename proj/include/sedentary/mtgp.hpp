#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sedentary/gp.hpp"
#include "sedentary/kernels.hpp"
#include "sedentary/lbfgs.hpp"
#include "sedentary/linalg.hpp"

namespace sedentary {

// Training points of all tasks stacked row-wise; `task[i]` says which task
// row i belongs to. Tasks may have different numbers of points, including zero.
struct TaskSet {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> task;
  int num_tasks = 0;

  Eigen::Index size() const { return y.size(); }

  static TaskSet from_tasks(const std::vector<Eigen::MatrixXd>& xs,
                            const std::vector<Eigen::VectorXd>& ys) {
    if (xs.size() != ys.size()) throw DomainError("task X/y count mismatch");
    TaskSet t;
    t.num_tasks = static_cast<int>(xs.size());
    Eigen::Index rows = 0, dim = -1;
    for (std::size_t l = 0; l < xs.size(); ++l) {
      if (xs[l].rows() != ys[l].size()) throw DomainError("task X/y size mismatch");
      if (xs[l].rows() > 0) {
        if (dim >= 0 && xs[l].cols() != dim) throw DomainError("task input dimension mismatch");
        dim = xs[l].cols();
      }
      rows += xs[l].rows();
    }
    t.x.resize(rows, std::max<Eigen::Index>(dim, 0));
    t.y.resize(rows);
    Eigen::Index r = 0;
    for (std::size_t l = 0; l < xs.size(); ++l) {
      if (xs[l].rows() == 0) continue;
      t.x.middleRows(r, xs[l].rows()) = xs[l];
      t.y.segment(r, xs[l].rows()) = ys[l];
      for (Eigen::Index i = 0; i < xs[l].rows(); ++i) t.task.push_back(static_cast<int>(l));
      r += xs[l].rows();
    }
    return t;
  }
};

struct MTGPHyperparams {
  double lengthscale = 1.0;
  Eigen::MatrixXd task_chol;  // lower triangular L, K^f = L L^T
  Eigen::VectorXd task_noises;
  double mean_constant = 0.0;
  double mean_prior_mean = 0.0;
  double mean_prior_scale = 2.0;

  int num_tasks() const { return static_cast<int>(task_chol.rows()); }

  Eigen::MatrixXd task_covariance() const {
    const Eigen::MatrixXd l = task_chol.triangularView<Eigen::Lower>();
    return l * l.transpose();
  }

  void validate() const {
    if (!(lengthscale > 0.0)) throw DomainError("lengthscale must be positive");
    if (task_chol.rows() != task_chol.cols() || task_chol.rows() == 0)
      throw DomainError("task Cholesky factor must be square and non-empty");
    if (task_noises.size() != task_chol.rows())
      throw DomainError("need one noise variance per task");
    if ((task_noises.array() < 0.0).any()) throw DomainError("task noises must be non-negative");
    if ((task_covariance().diagonal().array() <= 0.0).any())
      throw DomainError("task covariance diagonal must be positive");
    if (!(mean_prior_scale > 0.0)) throw DomainError("mean prior scale must be positive");
  }

  // Cholesky factor of 0.9 I + 0.1 11^T.
  static Eigen::MatrixXd default_task_chol(int m) {
    Eigen::MatrixXd kf = 0.1 * Eigen::MatrixXd::Ones(m, m);
    kf.diagonal().array() += 0.9;
    return Eigen::LLT<Eigen::MatrixXd>(kf).matrixL();
  }
};

// Adds one task exchangeable with the existing ones: f_new = mean_l f_l + e
// with e independent, so cov(f_new, f_l) = (K^f u)_l for u = 1/M, var(f_new)
// = mean diag(K^f), and its noise is the mean task noise. The extended
// Cholesky factor is exact: new row L^T u, new diagonal sqrt(d - |L^T u|^2).
inline MTGPHyperparams extend_with_population_task(const MTGPHyperparams& h) {
  h.validate();
  const int m = h.num_tasks();
  const Eigen::MatrixXd l = h.task_chol.triangularView<Eigen::Lower>();
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / m);
  const Eigen::VectorXd row = l.transpose() * u;
  const double d = h.task_covariance().diagonal().mean();
  MTGPHyperparams out = h;
  out.task_chol = Eigen::MatrixXd::Zero(m + 1, m + 1);
  out.task_chol.topLeftCorner(m, m) = l;
  out.task_chol.row(m).head(m) = row.transpose();
  out.task_chol(m, m) = std::sqrt(std::max(d - row.squaredNorm(), 0.0));
  out.task_noises.resize(m + 1);
  out.task_noises.head(m) = h.task_noises;
  out.task_noises[m] = h.task_noises.mean();
  return out;
}

// Entry ((l,p),(m,q)) = K^f[l,m] k(x_p, x_q) + [same point] sigma_l^2.
inline Eigen::MatrixXd assemble_sigma(const MTGPHyperparams& h, const TaskSet& data) {
  h.validate();
  if (data.num_tasks != h.num_tasks())
    throw DomainError("task count mismatch: data has " + std::to_string(data.num_tasks) +
                      ", hyperparameters have " + std::to_string(h.num_tasks()));
  if (data.size() == 0) throw DomainError("need at least one training point");
  const Eigen::MatrixXd kf = h.task_covariance();
  Eigen::MatrixXd sigma = rbf_correlation(data.x, h.lengthscale);
  const auto n = data.size();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) sigma(i, j) *= kf(data.task[i], data.task[j]);
  for (Eigen::Index i = 0; i < n; ++i) sigma(i, i) += h.task_noises[data.task[i]];
  return sigma;
}

struct MTGPLikelihood {
  double value = 0.0;
  double d_log_lengthscale = 0.0;
  Eigen::MatrixXd d_task_chol;      // lower triangular
  Eigen::VectorXd d_log_task_noises;
  double d_mean_constant = 0.0;
};

inline MTGPLikelihood mtgp_likelihood(const MTGPHyperparams& h, const TaskSet& data,
                                      bool with_gradient = true) {
  const Eigen::MatrixXd sigma = assemble_sigma(h, data);
  const Eigen::MatrixXd kf = h.task_covariance();
  const auto chol = jittered_cholesky(sigma, kf.diagonal().maxCoeff());
  const Eigen::VectorXd r = data.y.array() - h.mean_constant;
  const Eigen::VectorXd alpha = chol.solve(r);
  const auto n = data.size();
  const int m = h.num_tasks();
  MTGPLikelihood out;
  out.value = -0.5 * r.dot(alpha) - 0.5 * chol.log_determinant() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (!with_gradient) return out;

  const Eigen::MatrixXd d2 = squared_distances(data.x);
  const double inv_l2 = 1.0 / (h.lengthscale * h.lengthscale);
  Eigen::MatrixXd w = alpha * alpha.transpose() - chol.inverse();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  double dl = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int tj = data.task[j];
    for (Eigen::Index i = 0; i < n; ++i) {
      const int ti = data.task[i];
      const double wc = w(i, j) * std::exp(-0.5 * d2(i, j) * inv_l2);
      g(ti, tj) += wc;
      dl += wc * kf(ti, tj) * d2(i, j);
    }
  }
  out.d_log_lengthscale = 0.5 * dl * inv_l2;
  // d/dL of tr(G^T L L^T)/2 with G symmetric is G L.
  out.d_task_chol = (g * h.task_chol.triangularView<Eigen::Lower>()).triangularView<Eigen::Lower>();
  out.d_log_task_noises = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < n; ++i) out.d_log_task_noises[data.task[i]] += w(i, i);
  out.d_log_task_noises = 0.5 * out.d_log_task_noises.cwiseProduct(h.task_noises);
  out.d_mean_constant = alpha.sum();
  return out;
}

struct MTGPFitConfig {
  OptConfig opt{};
  double noise_floor = 1e-6;
  std::optional<double> mean_prior_mean;
  double mean_prior_scale = 2.0;
  double initial_lengthscale = 1.0;
  double initial_noise_variance = 0.1;
};

class MTGPFitError : public FitError {
 public:
  MTGPFitError(const FitError& e, MTGPHyperparams last) : FitError(e), last_(std::move(last)) {}
  const MTGPHyperparams& last_hyperparams() const { return last_; }

 private:
  MTGPHyperparams last_;
};

class MTGPModel {
 public:
  MTGPModel() = default;

  static MTGPModel condition(const MTGPHyperparams& h, TaskSet data) {
    MTGPModel m;
    m.hyper_ = h;
    m.data_ = std::move(data);
    m.kf_ = h.task_covariance();
    m.chol_ = jittered_cholesky(assemble_sigma(h, m.data_), m.kf_.diagonal().maxCoeff());
    m.alpha_ = m.chol_.solve(m.data_.y.array() - h.mean_constant);
    m.fitted_ = true;
    return m;
  }

  bool fitted() const { return fitted_; }
  const MTGPHyperparams& hyperparams() const { return require(), hyper_; }
  const Eigen::MatrixXd& task_covariance() const { return require(), kf_; }
  const TaskSet& data() const { return require(), data_; }
  const JitteredCholesky& cholesky() const { return require(), chol_; }
  int optimizer_iterations() const { return iterations_; }

  // Covariances between a point of task `i` and every training point.
  Eigen::VectorXd cross_covariance(int i, const Eigen::VectorXd& x) const {
    require();
    check_task(i);
    if (x.size() != data_.x.cols())
      throw DomainError("test point has dimension " + std::to_string(x.size()) + ", expected " +
                        std::to_string(data_.x.cols()));
    Eigen::VectorXd v = rbf_correlation(data_.x, x.transpose(), hyper_.lengthscale).col(0);
    for (Eigen::Index p = 0; p < v.size(); ++p) v[p] *= kf_(i, data_.task[p]);
    return v;
  }

  Prediction predict(int i, const Eigen::VectorXd& x) const {
    const Eigen::VectorXd v = cross_covariance(i, x);
    Prediction p;
    p.mean = hyper_.mean_constant + v.dot(alpha_);
    const Eigen::VectorXd s = chol_.lower.triangularView<Eigen::Lower>().solve(v);
    const double prior = kf_(i, i) + hyper_.task_noises[i];
    p.variance = clamp_variance(prior - s.squaredNorm(), prior);
    return p;
  }

  double log_marginal_likelihood() const {
    require();
    const Eigen::VectorXd r = data_.y.array() - hyper_.mean_constant;
    return -0.5 * r.dot(alpha_) - 0.5 * chol_.log_determinant() -
           0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi);
  }

  nlohmann::json to_json(const std::string& training_data_ref = "") const {
    require();
    nlohmann::json kf = nlohmann::json::array();
    for (Eigen::Index i = 0; i < kf_.rows(); ++i) {
      std::vector<double> row(kf_.cols());
      for (Eigen::Index j = 0; j < kf_.cols(); ++j) row[j] = kf_(i, j);
      kf.push_back(row);
    }
    std::vector<double> noises(hyper_.task_noises.data(),
                               hyper_.task_noises.data() + hyper_.task_noises.size());
    return {{"kind", "mtgp"},
            {"lengthscale", hyper_.lengthscale},
            {"task_covariance", kf},
            {"task_noises", noises},
            {"mean_constant", hyper_.mean_constant},
            {"mean_prior_mean", hyper_.mean_prior_mean},
            {"mean_prior_scale", hyper_.mean_prior_scale},
            {"jitter", chol_.jitter},
            {"n_train", data_.size()},
            {"log_marginal_likelihood", log_marginal_likelihood()},
            {"training_data", training_data_ref}};
  }

 private:
  friend MTGPModel mtgp_fit(const TaskSet&, const MTGPHyperparams&, const MTGPFitConfig&);
  void require() const {
    if (!fitted_) throw StateError("multi-task GP model has not been fitted");
  }
  void check_task(int i) const {
    if (i < 0 || i >= hyper_.num_tasks())
      throw DomainError("task index " + std::to_string(i) + " out of range [0, " +
                        std::to_string(hyper_.num_tasks()) + ")");
  }

  MTGPHyperparams hyper_{};
  TaskSet data_;
  Eigen::MatrixXd kf_;
  JitteredCholesky chol_;
  Eigen::VectorXd alpha_;
  bool fitted_ = false;
  int iterations_ = 0;
};

inline MTGPHyperparams default_mtgp_init(const TaskSet& data, const MTGPFitConfig& cfg) {
  MTGPHyperparams h;
  h.lengthscale = cfg.initial_lengthscale;
  h.task_chol = MTGPHyperparams::default_task_chol(data.num_tasks);
  h.task_noises = Eigen::VectorXd::Constant(data.num_tasks,
                                            std::max(cfg.initial_noise_variance, cfg.noise_floor));
  h.mean_constant = data.size() > 0 ? data.y.mean() : 0.0;
  h.mean_prior_mean = cfg.mean_prior_mean.value_or(h.mean_constant);
  h.mean_prior_scale = cfg.mean_prior_scale;
  return h;
}

// Parameters: log l, the lower triangle of L (column-major), log(sigma_l^2 - floor), c.
inline MTGPModel mtgp_fit(const TaskSet& data, const MTGPHyperparams& init,
                          const MTGPFitConfig& cfg) {
  init.validate();
  if (data.num_tasks != init.num_tasks()) throw DomainError("task count mismatch");
  if (data.size() == 0) throw DomainError("need at least one training point");
  const int m = init.num_tasks();
  const int n_chol = m * (m + 1) / 2;
  const double floor = cfg.noise_floor;

  const auto unpack = [&](const Eigen::VectorXd& t) {
    MTGPHyperparams h = init;
    h.lengthscale = std::exp(t[0]);
    h.task_chol = Eigen::MatrixXd::Zero(m, m);
    int k = 1;
    for (int c = 0; c < m; ++c)
      for (int r = c; r < m; ++r) h.task_chol(r, c) = t[k++];
    for (int l = 0; l < m; ++l) h.task_noises[l] = floor + std::exp(t[k++]);
    h.mean_constant = t[k];
    return h;
  };
  Eigen::VectorXd theta(2 + n_chol + m);
  {
    theta[0] = std::log(init.lengthscale);
    int k = 1;
    for (int c = 0; c < m; ++c)
      for (int r = c; r < m; ++r) theta[k++] = init.task_chol(r, c);
    for (int l = 0; l < m; ++l)
      theta[k++] = std::log(std::max(init.task_noises[l] - floor, 1e-12));
    theta[k] = init.mean_constant;
  }

  const auto objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) -> double {
    const MTGPHyperparams h = unpack(t);
    MTGPLikelihood lik;
    try {
      lik = mtgp_likelihood(h, data);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::quiet_NaN();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    grad.resize(t.size());
    grad[0] = -lik.d_log_lengthscale;
    int k = 1;
    for (int c = 0; c < m; ++c)
      for (int r = c; r < m; ++r) grad[k++] = -lik.d_task_chol(r, c);
    for (int l = 0; l < m; ++l)
      grad[k++] = -lik.d_log_task_noises[l] * (h.task_noises[l] - floor) / h.task_noises[l];
    grad[k] = -(lik.d_mean_constant -
                (h.mean_constant - h.mean_prior_mean) / (h.mean_prior_scale * h.mean_prior_scale));
    return -(lik.value + log_normal_density(h.mean_constant, h.mean_prior_mean, h.mean_prior_scale));
  };

  OptResult res;
  try {
    res = minimize_lbfgs(objective, theta, cfg.opt);
  } catch (const FitError& e) {
    throw MTGPFitError(e, unpack(e.last_valid()));
  }
  MTGPModel model = MTGPModel::condition(unpack(res.x), data);
  model.iterations_ = res.iterations;
  return model;
}

inline MTGPModel mtgp_fit(const TaskSet& data, const MTGPFitConfig& cfg = {}) {
  return mtgp_fit(data, default_mtgp_init(data, cfg), cfg);
}

inline Prediction mtgp_predict(const MTGPModel& model, int task, const Eigen::VectorXd& x) {
  return model.predict(task, x);
}

}  // namespace sedentary
