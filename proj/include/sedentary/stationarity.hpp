#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "sedentary/error.hpp"
#include "sedentary/records.hpp"
#include "sedentary/regressors.hpp"

namespace sedentary {

inline constexpr double kVarianceFloor = 1e-9;

// sum_i log N(y_i | mean_i, variance)
inline double gaussian_loglik(const Eigen::VectorXd& residuals, double variance) {
  const auto n = static_cast<double>(residuals.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * variance) -
         0.5 * residuals.squaredNorm() / variance;
}

inline double mle_variance(const Eigen::VectorXd& residuals) {
  return std::max(residuals.squaredNorm() / static_cast<double>(residuals.size()), kVarianceFloor);
}

// Log likelihood of a fitted regressor's residuals at their own MLE variance.
inline double gaussian_loglik(const LinearRegressor& regressor, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y) {
  if (X.rows() == 0) throw DomainError("gaussian_loglik: empty data");
  const Eigen::VectorXd res = y - regressor.predict(X);
  return gaussian_loglik(res, mle_variance(res));
}

enum class DofMode {
  WindowsMinusOne,      // k - 1
  ParameterDifference,  // (k - 1) * (coefficients + intercept + variance)
};

inline DofMode parse_dof_mode(const std::string& s) {
  if (s == "windows") return DofMode::WindowsMinusOne;
  if (s == "parameters") return DofMode::ParameterDifference;
  throw ConfigError("unknown dof mode '" + s + "' (valid: windows, parameters)");
}

inline const char* to_string(DofMode m) {
  return m == DofMode::WindowsMinusOne ? "windows" : "parameters";
}

enum class StationarityFeatures {
  Continuous,  // the three standardized continuous features
  Full,        // continuous features plus weather one-hot
};

inline StationarityFeatures parse_stationarity_features(const std::string& s) {
  if (s == "continuous") return StationarityFeatures::Continuous;
  if (s == "full") return StationarityFeatures::Full;
  throw ConfigError("unknown feature set '" + s + "' (valid: continuous, full)");
}

struct StationarityConfig {
  double alpha = 0.05;
  DofMode dof = DofMode::WindowsMinusOne;
  StationarityFeatures features = StationarityFeatures::Continuous;
};

struct StationarityResult {
  std::string participant_id;
  int window_length = 0;
  int k = 0;
  double statistic = 0.0;
  int dof = 0;
  double threshold = 0.0;
  bool reject_null = false;
};

inline double chi_squared_quantile(int dof, double p) {
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::quantile(dist, p);
}

// Likelihood-ratio comparison of one regression over the first k*window
// rows against k separate per-window regressions.
inline StationarityResult stationarity_test(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                            int window_length, const StationarityConfig& cfg) {
  if (window_length < 1) throw DomainError("window length must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (X.rows() != y.size()) throw DomainError("X and y sizes differ");
  StationarityResult out;
  out.window_length = window_length;
  out.k = static_cast<int>(X.rows() / window_length);
  if (out.k < 2)
    throw DegenerateTestError("window length " + std::to_string(window_length) + " leaves k = " +
                              std::to_string(out.k) + " window(s); need at least 2");
  const auto used = static_cast<Eigen::Index>(out.k) * window_length;
  const Eigen::MatrixXd xs = X.topRows(used);
  const Eigen::VectorXd ys = y.head(used);

  const LinearRegressor null_model = ols_fit(xs, ys);
  const Eigen::VectorXd null_res = ys - null_model.predict(xs);
  const double null_var = mle_variance(null_res);

  double stat = 0.0;
  for (int i = 0; i < out.k; ++i) {
    const auto start = static_cast<Eigen::Index>(i) * window_length;
    const Eigen::MatrixXd xw = xs.middleRows(start, window_length);
    const Eigen::VectorXd yw = ys.segment(start, window_length);
    const double ll_null = gaussian_loglik(Eigen::VectorXd(null_res.segment(start, window_length)), null_var);
    const double ll_window = gaussian_loglik(ols_fit(xw, yw), xw, yw);
    stat += 2.0 * (ll_window - ll_null);
  }
  out.statistic = stat;
  const int params = static_cast<int>(X.cols()) + 2;
  out.dof = cfg.dof == DofMode::WindowsMinusOne ? out.k - 1 : (out.k - 1) * params;
  out.threshold = chi_squared_quantile(out.dof, 1.0 - cfg.alpha);
  out.reject_null = out.statistic > out.threshold;
  return out;
}

// Design matrix for the stationarity regressions; standardized within the series.
inline Eigen::MatrixXd stationarity_design(const ParticipantSeries& series,
                                           StationarityFeatures features) {
  const auto scaler = FeatureScaler::fit(series.records);
  const Eigen::MatrixXd full =
      encode_matrix(series.records, default_weather_vocabulary(), scaler);
  if (features == StationarityFeatures::Full) return full;
  return full.leftCols(kContinuousFeatures);
}

inline StationarityResult stationarity_test(const ParticipantSeries& series, int window_length,
                                            const StationarityConfig& cfg = {}) {
  auto r = stationarity_test(stationarity_design(series, cfg.features), target_vector(series.records),
                             window_length, cfg);
  r.participant_id = series.participant_id;
  return r;
}

}  // namespace sedentary
