#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sedentary/error.hpp"
#include "sedentary/kernels.hpp"
#include "sedentary/lbfgs.hpp"
#include "sedentary/linalg.hpp"

namespace sedentary {

struct GPHyperparams {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 0.1;
  double mean_constant = 0.0;
  double mean_prior_mean = 0.0;
  double mean_prior_scale = 2.0;

  void validate() const {
    if (!(lengthscale > 0.0)) throw DomainError("lengthscale must be positive");
    if (!(signal_variance > 0.0)) throw DomainError("signal variance must be positive");
    if (!(noise_variance >= 0.0)) throw DomainError("noise variance must be non-negative");
    if (!(mean_prior_scale > 0.0)) throw DomainError("mean prior scale must be positive");
    if (!std::isfinite(mean_constant) || !std::isfinite(mean_prior_mean))
      throw DomainError("mean parameters must be finite");
  }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Negative predictive variances within this (relative) slack are rounding.
inline double clamp_variance(double variance, double prior_variance) {
  if (variance >= 0.0) return variance;
  if (variance >= -1e-10 * std::max(1.0, prior_variance)) return 0.0;
  throw NumericalError("predictive variance " + std::to_string(variance) + " is negative");
}

inline double log_normal_density(double x, double mean, double scale) {
  const double z = (x - mean) / scale;
  return -0.5 * z * z - std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Gradient entries are with respect to (log l, log s2, log sigma_n^2, c).
struct GPLikelihood {
  double value = 0.0;
  Eigen::Vector4d gradient = Eigen::Vector4d::Zero();
};

// log N(y | c 1, s2 R + sigma_n^2 I); the prior on c is not included.
inline GPLikelihood gp_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const GPHyperparams& h, bool with_gradient = true) {
  const auto n = X.rows();
  const Eigen::MatrixXd d2 = squared_distances(X);
  const Eigen::MatrixXd corr = (d2 * (-0.5 / (h.lengthscale * h.lengthscale))).array().exp().matrix();
  Eigen::MatrixXd k = h.signal_variance * corr;
  k.diagonal().array() += h.noise_variance;
  const auto chol = jittered_cholesky(k, h.signal_variance);
  const Eigen::VectorXd r = y.array() - h.mean_constant;
  const Eigen::VectorXd alpha = chol.solve(r);
  GPLikelihood out;
  out.value = -0.5 * r.dot(alpha) - 0.5 * chol.log_determinant() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (!with_gradient) return out;
  // W = alpha alpha^T - K^{-1}; dL/dtheta = tr(W dK/dtheta) / 2
  Eigen::MatrixXd w = alpha * alpha.transpose() - chol.inverse();
  const double inv_l2 = 1.0 / (h.lengthscale * h.lengthscale);
  const Eigen::ArrayXXd wk = w.array() * corr.array();
  out.gradient[0] = 0.5 * h.signal_variance * inv_l2 * (wk * d2.array()).sum();
  out.gradient[1] = 0.5 * h.signal_variance * wk.sum();
  out.gradient[2] = 0.5 * h.noise_variance * w.trace();
  out.gradient[3] = alpha.sum();
  return out;
}

struct GPFitConfig {
  OptConfig opt{};
  bool optimize_noise = true;
  double noise_floor = 1e-6;  // learned noise never drops below this
  std::optional<double> mean_prior_mean;  // defaults to the training-target mean
  double mean_prior_scale = 2.0;
  double initial_lengthscale = 1.0;
  double initial_signal_variance = 1.0;
  double initial_noise_variance = 0.1;
};

class GPModel;

// Fit failure carrying the hyperparameters of the last point where the
// objective was finite.
class GPFitError : public FitError {
 public:
  GPFitError(const FitError& e, GPHyperparams last)
      : FitError(e), last_hyperparams_(last) {}
  const GPHyperparams& last_hyperparams() const { return last_hyperparams_; }

 private:
  GPHyperparams last_hyperparams_;
};

class GPModel {
 public:
  GPModel() = default;

  // Posterior under fixed hyperparameters; no optimization.
  static GPModel condition(const GPHyperparams& h, Eigen::MatrixXd X, Eigen::VectorXd y) {
    h.validate();
    if (X.rows() != y.size()) throw DomainError("X and y sizes differ");
    if (X.rows() == 0) throw DomainError("GP needs at least one training point");
    GPModel m;
    m.hyper_ = h;
    m.x_ = std::move(X);
    m.y_ = std::move(y);
    Eigen::MatrixXd k = h.signal_variance * rbf_correlation(m.x_, h.lengthscale);
    k.diagonal().array() += h.noise_variance;
    m.chol_ = jittered_cholesky(k, h.signal_variance);
    m.alpha_ = m.chol_.solve(m.y_.array() - h.mean_constant);
    m.fitted_ = true;
    return m;
  }

  bool fitted() const { return fitted_; }
  const GPHyperparams& hyperparams() const { return require(), hyper_; }
  const Eigen::MatrixXd& train_x() const { return require(), x_; }
  const Eigen::VectorXd& train_y() const { return require(), y_; }
  const JitteredCholesky& cholesky() const { return require(), chol_; }
  const Eigen::VectorXd& alpha() const { return require(), alpha_; }
  int optimizer_iterations() const { return iterations_; }

  Prediction predict(const Eigen::VectorXd& x) const {
    require();
    if (x.size() != x_.cols())
      throw DomainError("test point has dimension " + std::to_string(x.size()) + ", expected " +
                        std::to_string(x_.cols()));
    const Eigen::VectorXd k =
        hyper_.signal_variance * rbf_correlation(x_, x.transpose(), hyper_.lengthscale).col(0);
    Prediction p;
    p.mean = hyper_.mean_constant + k.dot(alpha_);
    const Eigen::VectorXd v = chol_.lower.triangularView<Eigen::Lower>().solve(k);
    p.variance = clamp_variance(hyper_.signal_variance - v.squaredNorm(), hyper_.signal_variance);
    return p;
  }

  double log_marginal_likelihood() const {
    require();
    const Eigen::VectorXd r = y_.array() - hyper_.mean_constant;
    return -0.5 * r.dot(alpha_) - 0.5 * chol_.log_determinant() -
           0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
  }

  nlohmann::json to_json(const std::string& training_data_ref = "") const {
    require();
    return {{"kind", "gp"},
            {"lengthscale", hyper_.lengthscale},
            {"signal_variance", hyper_.signal_variance},
            {"noise_variance", hyper_.noise_variance},
            {"mean_constant", hyper_.mean_constant},
            {"mean_prior_mean", hyper_.mean_prior_mean},
            {"mean_prior_scale", hyper_.mean_prior_scale},
            {"jitter", chol_.jitter},
            {"n_train", x_.rows()},
            {"input_dim", x_.cols()},
            {"log_marginal_likelihood", log_marginal_likelihood()},
            {"training_data", training_data_ref}};
  }

  static GPHyperparams hyperparams_from_json(const nlohmann::json& j) {
    GPHyperparams h;
    h.lengthscale = j.at("lengthscale").get<double>();
    h.signal_variance = j.at("signal_variance").get<double>();
    h.noise_variance = j.at("noise_variance").get<double>();
    h.mean_constant = j.at("mean_constant").get<double>();
    h.mean_prior_mean = j.at("mean_prior_mean").get<double>();
    h.mean_prior_scale = j.at("mean_prior_scale").get<double>();
    h.validate();
    return h;
  }

 private:
  friend GPModel gp_fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const GPHyperparams&,
                        const GPFitConfig&);
  void require() const {
    if (!fitted_) throw StateError("GP model has not been fitted");
  }

  GPHyperparams hyper_{};
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  JitteredCholesky chol_;
  Eigen::VectorXd alpha_;
  bool fitted_ = false;
  int iterations_ = 0;
};

inline GPHyperparams default_gp_init(const Eigen::VectorXd& y, const GPFitConfig& cfg) {
  GPHyperparams h;
  h.lengthscale = cfg.initial_lengthscale;
  h.signal_variance = cfg.initial_signal_variance;
  h.noise_variance = cfg.optimize_noise ? std::max(cfg.initial_noise_variance, cfg.noise_floor)
                                        : cfg.initial_noise_variance;
  h.mean_constant = y.size() > 0 ? y.mean() : 0.0;
  h.mean_prior_mean = cfg.mean_prior_mean.value_or(h.mean_constant);
  h.mean_prior_scale = cfg.mean_prior_scale;
  return h;
}

// Maximizes log marginal likelihood + log prior(c) over log l, log s2,
// log(sigma_n^2 - floor) (when optimized) and c, starting from `init`.
inline GPModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPHyperparams& init,
                      const GPFitConfig& cfg) {
  if (X.rows() != y.size()) throw DomainError("X and y sizes differ");
  if (X.rows() == 0) throw DomainError("GP needs at least one training point");
  init.validate();
  const bool opt_noise = cfg.optimize_noise;
  const double floor = cfg.noise_floor;

  const auto unpack = [&](const Eigen::VectorXd& t) {
    GPHyperparams h = init;
    h.lengthscale = std::exp(t[0]);
    h.signal_variance = std::exp(t[1]);
    h.mean_constant = t[2];
    if (opt_noise) h.noise_variance = floor + std::exp(t[3]);
    return h;
  };
  Eigen::VectorXd theta(opt_noise ? 4 : 3);
  theta[0] = std::log(init.lengthscale);
  theta[1] = std::log(init.signal_variance);
  theta[2] = init.mean_constant;
  if (opt_noise) theta[3] = std::log(std::max(init.noise_variance - floor, 1e-12));

  const auto objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) -> double {
    const GPHyperparams h = unpack(t);
    GPLikelihood lik;
    try {
      lik = gp_likelihood(X, y, h);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double value =
        lik.value + log_normal_density(h.mean_constant, h.mean_prior_mean, h.mean_prior_scale);
    grad.resize(t.size());
    grad[0] = -lik.gradient[0];
    grad[1] = -lik.gradient[1];
    grad[2] = -(lik.gradient[3] -
                (h.mean_constant - h.mean_prior_mean) / (h.mean_prior_scale * h.mean_prior_scale));
    if (opt_noise) grad[3] = -lik.gradient[2] * (h.noise_variance - floor) / h.noise_variance;
    return -value;
  };

  OptResult res;
  try {
    res = minimize_lbfgs(objective, theta, cfg.opt);
  } catch (const FitError& e) {
    throw GPFitError(e, unpack(e.last_valid()));
  }
  GPModel m = GPModel::condition(unpack(res.x), X, y);
  m.iterations_ = res.iterations;
  return m;
}

inline GPModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const GPFitConfig& cfg = {}) {
  return gp_fit(X, y, default_gp_init(y, cfg), cfg);
}

inline Prediction gp_predict(const GPModel& model, const Eigen::VectorXd& x) {
  return model.predict(x);
}

inline double gp_log_marginal_likelihood(const GPModel& model) {
  return model.log_marginal_likelihood();
}

}  // namespace sedentary
