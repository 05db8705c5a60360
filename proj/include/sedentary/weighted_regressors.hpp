#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sedentary/error.hpp"
#include "sedentary/regressors.hpp"

namespace sedentary {

struct WRConfig {
  int window = 5;          // w, days predicted per step
  int initial_days = 5;    // s, days observed before the first prediction
  double delta_scale = 0.2;
  std::optional<double> delta_override;  // replaces the schedule's delta when set
  double initial_beta_global = 0.5;
  // Ridge strength used when the local design is underdetermined or
  // rank-deficient. 1e-6 reproduces plain min-norm least squares, which is
  // unstable with a handful of days and 24 features.
  double local_ridge_lambda = 1.0;
};

struct WRState {
  double beta_g = 0.5;
  double beta_l = 0.5;
  double delta = 0.0;
  LinearRegressor global;
  std::optional<LinearRegressor> local;
  int window = 5;
  int initial_days = 5;
};

struct WRPrediction {
  int day = 0;
  double value = 0.0;
  double global = 0.0;
  double local = 0.0;
};

struct WRStep {
  int t = 0;
  double beta_g = 0.0;  // weights used for this step's window
  double beta_l = 0.0;
  std::vector<WRPrediction> predictions;
};

struct WRRun {
  std::vector<WRStep> steps;
  WRState final_state;

  std::vector<WRPrediction> predictions() const {
    std::vector<WRPrediction> out;
    for (const auto& s : steps) out.insert(out.end(), s.predictions.begin(), s.predictions.end());
    return out;
  }
};

// Moves delta of weight from the global to the local model, keeping the
// pair on the simplex.
inline void shift_weight(WRState& st) {
  double g = std::clamp(st.beta_g - st.delta, 0.0, 1.0);
  double l = std::clamp(st.beta_l + st.delta, 0.0, 1.0);
  const double total = g + l;
  st.beta_g = g / total;
  st.beta_l = l / total;
}

// One test task's days in order: fits the local regressor on days [0, t),
// predicts days [t, t + w) with both regressors, blends, then shifts weight.
inline WRRun wr_run(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const LinearRegressor& global, const WRConfig& cfg) {
  if (cfg.window < 1) throw DomainError("wr_run: window must be >= 1");
  if (cfg.initial_days < 1) throw DomainError("wr_run: initial training days must be >= 1");
  if (X.rows() != y.size()) throw DomainError("wr_run: X and y sizes differ");
  const int len = static_cast<int>(X.rows());
  if (cfg.initial_days > len)
    throw DomainError("wr_run: initial training days " + std::to_string(cfg.initial_days) +
                      " exceed series length " + std::to_string(len));
  if (cfg.initial_beta_global < 0.0 || cfg.initial_beta_global > 1.0)
    throw DomainError("wr_run: initial global weight outside [0, 1]");

  WRRun run;
  WRState& st = run.final_state;
  st.global = global;
  st.window = cfg.window;
  st.initial_days = cfg.initial_days;
  st.beta_g = cfg.initial_beta_global;
  st.beta_l = 1.0 - cfg.initial_beta_global;
  st.delta = cfg.delta_override.value_or(cfg.delta_scale * static_cast<double>(cfg.window) /
                                         static_cast<double>(len));

  for (int t = cfg.initial_days; t < len; t += cfg.window) {
    st.local = ols_fit(X.topRows(t), y.head(t), cfg.local_ridge_lambda);
    WRStep step{t, st.beta_g, st.beta_l, {}};
    const int end = std::min(t + cfg.window, len);
    for (int d = t; d < end; ++d) {
      const Eigen::VectorXd x = X.row(d).transpose();
      WRPrediction p{d, 0.0, global.predict(x), st.local->predict(x)};
      p.value = st.beta_g * p.global + st.beta_l * p.local;
      step.predictions.push_back(p);
    }
    run.steps.push_back(std::move(step));
    shift_weight(st);
  }
  return run;
}

}  // namespace sedentary
