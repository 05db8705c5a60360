#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sedentary/error.hpp"
#include "sedentary/linalg.hpp"
#include "sedentary/records.hpp"

namespace sedentary {

enum class Nonstationarity { None, Drift, RegimeChange };

inline Nonstationarity parse_nonstationarity(const std::string& s) {
  if (s == "none") return Nonstationarity::None;
  if (s == "drift") return Nonstationarity::Drift;
  if (s == "regime") return Nonstationarity::RegimeChange;
  throw ConfigError("unknown nonstationarity '" + s + "' (valid: none, drift, regime)");
}

inline const char* to_string(Nonstationarity n) {
  switch (n) {
    case Nonstationarity::None: return "none";
    case Nonstationarity::Drift: return "drift";
    case Nonstationarity::RegimeChange: return "regime";
  }
  return "none";
}

struct SynthConfig {
  std::uint64_t seed = 42;
  int participants = 36;
  int days = 30;
  int day_jitter = 3;
  double shared_weight = 0.7;  // rho
  Nonstationarity nonstationarity = Nonstationarity::Drift;
  double drift_rate = 0.04;    // target units per day
  int change_day = 15;
  double change_magnitude = 2.0;
  double noise_sd = 0.7;
  int cluster_count = 1;

  void validate() const {
    if (participants < 1) throw ConfigError("participants must be >= 1");
    if (!(shared_weight >= 0.0 && shared_weight <= 1.0))
      throw ConfigError("rho must lie in [0, 1], got " + std::to_string(shared_weight));
    if (day_jitter < 0) throw ConfigError("day jitter must be >= 0");
    if (days - day_jitter < kMinUsableDays)
      throw ConfigError("days - jitter must be >= 7 so every series passes the usability filter");
    if (!(noise_sd >= 0.0)) throw ConfigError("noise sd must be non-negative");
    if (cluster_count < 1) throw ConfigError("cluster count must be >= 1");
    if (!std::isfinite(drift_rate) || !std::isfinite(change_magnitude))
      throw ConfigError("nonstationarity parameters must be finite");
  }

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"participants", participants},
            {"days", days},
            {"day_jitter", day_jitter},
            {"rho", shared_weight},
            {"nonstationarity", to_string(nonstationarity)},
            {"drift_rate", drift_rate},
            {"change_day", change_day},
            {"change_magnitude", change_magnitude},
            {"noise_sd", noise_sd},
            {"cluster_count", cluster_count}};
  }
};

namespace synth_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Distribution sampling written out so cohorts are identical across
// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  int below(int n) { return static_cast<int>(uniform() * n); }
  int categorical(const std::vector<double>& cumulative) {
    const double u = uniform() * cumulative.back();
    return static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                            cumulative.begin());
  }

 private:
  std::mt19937_64 engine_;
};

inline constexpr int kLatticeSide = 7;         // points per continuous feature
inline constexpr double kLatticeLow = -3.0;    // standardized units
inline constexpr double kLatticeStep = 1.0;
inline constexpr double kLatticeLengthscale = 1.5;
inline constexpr int kLatticeSize = kLatticeSide * kLatticeSide * kLatticeSide;

// Smooth random function of the three standardized continuous features,
// stored as values on a regular lattice, plus per-weather offsets.
struct SmoothFunction {
  Eigen::VectorXd lattice;
  std::array<double, kWeatherCategories> weather{};

  double operator()(const std::array<double, 3>& z, int weather_code) const {
    std::array<int, 3> base{};
    std::array<double, 3> frac{};
    for (int k = 0; k < 3; ++k) {
      const double u = std::clamp((z[k] - kLatticeLow) / kLatticeStep, 0.0,
                                  static_cast<double>(kLatticeSide - 1));
      base[k] = std::min(static_cast<int>(u), kLatticeSide - 2);
      frac[k] = u - base[k];
    }
    double v = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
      double w = 1.0;
      int idx = 0;
      for (int k = 0; k < 3; ++k) {
        const int bit = (corner >> k) & 1;
        w *= bit ? frac[k] : 1.0 - frac[k];
        idx = idx * kLatticeSide + base[k] + bit;
      }
      v += w * lattice[idx];
    }
    return v + weather[static_cast<std::size_t>(weather_code)];
  }
};

inline const Eigen::MatrixXd& lattice_prior_factor() {
  static const Eigen::MatrixXd factor = [] {
    Eigen::MatrixXd pts(kLatticeSize, 3);
    int r = 0;
    for (int a = 0; a < kLatticeSide; ++a)
      for (int b = 0; b < kLatticeSide; ++b)
        for (int c = 0; c < kLatticeSide; ++c, ++r)
          pts.row(r) << kLatticeLow + a * kLatticeStep, kLatticeLow + b * kLatticeStep,
              kLatticeLow + c * kLatticeStep;
    const Eigen::MatrixXd k =
        (squared_distances(pts) * (-0.5 / (kLatticeLengthscale * kLatticeLengthscale)))
            .array()
            .exp()
            .matrix();
    return jittered_cholesky(k, 1.0).lower;
  }();
  return factor;
}

inline SmoothFunction draw_function(Rng& rng, double weather_sd) {
  Eigen::VectorXd z(kLatticeSize);
  for (int i = 0; i < kLatticeSize; ++i) z[i] = rng.normal();
  SmoothFunction f;
  f.lattice = lattice_prior_factor() * z;
  for (auto& w : f.weather) w = weather_sd * rng.normal();
  return f;
}

inline constexpr double kMorningMean = 3500.0, kMorningScale = 1500.0;
inline constexpr double kTotalMean = 8000.0, kTotalScale = 3000.0;
inline constexpr double kSedentaryMean = 4.5, kSedentaryScale = 2.0;
inline constexpr double kBaseLevel = 4.5, kAmplitude = 2.0;

}  // namespace synth_detail

struct SynthParticipantTruth {
  std::string participant_id;
  int cluster = 0;
  double drift_sign = 1.0;
  int start_offset = 0;
  std::array<double, 2> activity_mean{};  // standardized morning / rest-of-day
};

struct SynthCohort {
  Cohort cohort;
  std::vector<SynthParticipantTruth> truth;
  nlohmann::json truth_json() const;
  SynthConfig config;
};

inline nlohmann::json SynthCohort::truth_json() const {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& t : truth)
    parts.push_back({{"participant_id", t.participant_id},
                     {"cluster", t.cluster},
                     {"drift_sign", t.drift_sign},
                     {"start_offset_days", t.start_offset},
                     {"activity_mean", t.activity_mean}});
  return {{"config", config.to_json()},
          {"response_function",
           {{"form", "target = clip(round(4.5 + 2 * (rho * f_shared + (1 - rho) * f_individual) + "
                     "nonstationarity + noise), 0, 9)"},
            {"lattice_points_per_feature", synth_detail::kLatticeSide},
            {"lattice_lengthscale", synth_detail::kLatticeLengthscale}}},
          {"participants", parts}};
}

// Weather frequencies loosely follow a temperate climate: clear and cloudy
// skies dominate, storms and snow are rare.
inline std::vector<double> weather_cumulative_weights() {
  const std::array<double, kWeatherCategories> w = {12, 8, 7, 7, 8, 4, 2, 2, 1, 6, 3,
                                                    1.5, 0.5, 2, 1.5, 1.5, 1, 0.5, 1, 1, 1};
  std::vector<double> cum;
  double acc = 0.0;
  for (double v : w) cum.push_back(acc += v);
  return cum;
}

inline SynthCohort generate(const SynthConfig& cfg) {
  using namespace synth_detail;
  cfg.validate();
  SynthCohort out;
  out.config = cfg;

  Rng shared_rng(cfg.seed ^ 0x5eed5eed5eedULL);
  const SmoothFunction shared = draw_function(shared_rng, 0.3);
  std::vector<double> cluster_offsets(static_cast<std::size_t>(cfg.cluster_count), 0.0);
  std::vector<std::array<double, 2>> cluster_centers(static_cast<std::size_t>(cfg.cluster_count));
  for (int c = 0; c < cfg.cluster_count; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / cfg.cluster_count + 0.5;
    cluster_centers[c] = cfg.cluster_count == 1 ? std::array<double, 2>{0.0, 0.0}
                                                : std::array<double, 2>{std::cos(angle), std::sin(angle)};
    cluster_offsets[c] =
        cfg.cluster_count == 1 ? 0.0 : -1.5 + 3.0 * c / static_cast<double>(cfg.cluster_count - 1);
  }

  const int max_offset = 60;
  const int weather_days = max_offset + cfg.days + cfg.day_jitter + 2;
  std::vector<int> weather(static_cast<std::size_t>(weather_days));
  {
    const auto cum = weather_cumulative_weights();
    Rng wrng(cfg.seed ^ 0x3ea7e2ULL);
    weather[0] = wrng.categorical(cum);
    for (int d = 1; d < weather_days; ++d)
      weather[d] = wrng.uniform() < 0.5 ? weather[d - 1] : wrng.categorical(cum);
  }
  const std::chrono::sys_days study_start = std::chrono::sys_days{
      Date{std::chrono::year{2015}, std::chrono::month{8}, std::chrono::day{1}}};

  for (int j = 0; j < cfg.participants; ++j) {
    Rng rng(cfg.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(j) + 1);
    SynthParticipantTruth truth;
    char id[16];
    std::snprintf(id, sizeof(id), "P%03d", j + 1);
    truth.participant_id = id;
    truth.cluster = j % cfg.cluster_count;
    truth.drift_sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    truth.start_offset = rng.below(max_offset);
    const int n_days = cfg.days + (cfg.day_jitter > 0 ? rng.below(2 * cfg.day_jitter + 1) - cfg.day_jitter : 0);
    const auto& center = cluster_centers[truth.cluster];
    truth.activity_mean = {center[0] + 0.3 * rng.normal(), center[1] + 0.3 * rng.normal()};
    const SmoothFunction individual = draw_function(rng, 0.3);

    const auto response = [&](const std::array<double, 3>& z, int w, int day) {
      double f = cfg.shared_weight * (shared(z, w) + cluster_offsets[truth.cluster]) +
                 (1.0 - cfg.shared_weight) * individual(z, w);
      double level = kBaseLevel + kAmplitude * f;
      switch (cfg.nonstationarity) {
        case Nonstationarity::None: break;
        case Nonstationarity::Drift:
          level += truth.drift_sign * cfg.drift_rate * (day - 0.5 * n_days);
          break;
        case Nonstationarity::RegimeChange:
          if (day >= cfg.change_day) level += truth.drift_sign * cfg.change_magnitude;
          break;
      }
      return level + cfg.noise_sd * rng.normal();
    };
    const auto draw_steps = [&](double mean, double scale, double z_mean) {
      return std::max<std::int64_t>(
          0, std::llround(mean + scale * (z_mean + 0.6 * rng.normal())));
    };

    ParticipantSeries series{truth.participant_id, {}};
    // day -1 supplies the first record's lag features
    std::int64_t prev_total =
        draw_steps(kMorningMean, kMorningScale, truth.activity_mean[0]) +
        draw_steps(kTotalMean - kMorningMean, kTotalScale - kMorningScale, truth.activity_mean[1]);
    int prev_sedentary = std::clamp(static_cast<int>(std::lround(kBaseLevel + rng.normal())), 0,
                                    kMaxSedentaryCount);
    for (int d = 0; d < n_days; ++d) {
      const int calendar_index = truth.start_offset + d + 1;
      DayRecord r;
      r.date = Date{study_start + std::chrono::days{calendar_index}};
      r.morning_steps = draw_steps(kMorningMean, kMorningScale, truth.activity_mean[0]);
      r.prev_total_steps = prev_total;
      r.prev_sedentary_count = prev_sedentary;
      r.weather_code = weather[static_cast<std::size_t>(calendar_index)];
      const std::array<double, 3> z = {
          (static_cast<double>(r.morning_steps) - kMorningMean) / kMorningScale,
          (static_cast<double>(r.prev_total_steps) - kTotalMean) / kTotalScale,
          (r.prev_sedentary_count - kSedentaryMean) / kSedentaryScale};
      r.target = std::clamp(static_cast<int>(std::lround(response(z, r.weather_code, d))), 0,
                            kMaxSedentaryCount);
      series.records.push_back(r);
      prev_total = r.morning_steps + draw_steps(kTotalMean - kMorningMean,
                                                kTotalScale - kMorningScale, truth.activity_mean[1]);
      prev_sedentary = r.target;
    }
    out.cohort.participants.push_back(std::move(series));
    out.truth.push_back(truth);
  }
  return out;
}

}  // namespace sedentary
