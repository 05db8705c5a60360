#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "sedentary/error.hpp"

namespace sedentary {

struct OptConfig {
  int max_iterations = 100;
  double gradient_tolerance = 1e-5;   // on the infinity norm
  double relative_tolerance = 1e-10;  // on successive objective values
  int history = 10;
  int max_line_search = 40;
};

struct OptResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
};

// Raised when the objective stops producing finite values; carries the last
// point where it was finite.
class FitError : public Error {
 public:
  FitError(const std::string& what, Eigen::VectorXd last_valid, double last_value)
      : Error("E_FIT", what), last_valid_(std::move(last_valid)), last_value_(last_value) {}
  const Eigen::VectorXd& last_valid() const { return last_valid_; }
  double last_value() const { return last_value_; }

 private:
  Eigen::VectorXd last_valid_;
  double last_value_;
};

// Limited-memory BFGS with Armijo backtracking. `f(x, grad)` returns the
// value to minimize and fills `grad`; non-finite values mark infeasible
// points and shrink the step.
template <typename Objective>
OptResult minimize_lbfgs(Objective&& f, Eigen::VectorXd x, const OptConfig& cfg) {
  const auto n = x.size();
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  if (!std::isfinite(fx) || !g.allFinite())
    throw FitError("objective not finite at the initial point", x, fx);

  OptResult res;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd g_new(n), x_new(n);

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (n == 0 || g.lpNorm<Eigen::Infinity>() <= cfg.gradient_tolerance) {
      res.converged = true;
      res.stop_reason = "gradient tolerance";
      break;
    }
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += (alpha[i] - beta) * s_hist[i];
    }
    dir = -dir;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;
    bool accepted = false;
    bool any_finite = false;
    double f_new = 0.0;
    for (int ls = 0; ls < cfg.max_line_search; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      const bool finite = std::isfinite(f_new) && g_new.allFinite();
      any_finite = any_finite || finite;
      if (finite && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!any_finite)
        throw FitError("objective became non-finite along the search direction", x, fx);
      res.stop_reason = "line search made no progress";
      res.converged = true;
      break;
    }

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * yv.squaredNorm() && sy > 0.0) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double prev = fx;
    x = x_new;
    g = g_new;
    fx = f_new;
    res.iterations = iter + 1;
    if (std::abs(prev - fx) <= cfg.relative_tolerance * std::max({1.0, std::abs(prev), std::abs(fx)})) {
      res.converged = true;
      res.stop_reason = "relative tolerance";
      break;
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "iteration cap";
  res.x = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace sedentary
