#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sedentary/conditioning.hpp"
#include "sedentary/csv.hpp"
#include "sedentary/error.hpp"
#include "sedentary/gp.hpp"
#include "sedentary/mtgp.hpp"
#include "sedentary/records.hpp"
#include "sedentary/regressors.hpp"
#include "sedentary/synth.hpp"
#include "sedentary/weighted_regressors.hpp"

namespace sedentary {

enum class ModelKind { Mean, GPInd, GPBatch, GPMT, WR };

inline const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> models = {ModelKind::Mean, ModelKind::GPInd,
                                                ModelKind::GPBatch, ModelKind::GPMT, ModelKind::WR};
  return models;
}

inline std::string model_name(ModelKind m) {
  switch (m) {
    case ModelKind::Mean: return "mean";
    case ModelKind::GPInd: return "gp-ind";
    case ModelKind::GPBatch: return "gp-batch";
    case ModelKind::GPMT: return "gp-mt";
    case ModelKind::WR: return "wr";
  }
  return "?";
}

inline ModelKind parse_model(const std::string& name) {
  for (auto m : all_models())
    if (model_name(m) == name) return m;
  throw ConfigError("unknown model '" + name + "' (valid: mean, gp-ind, gp-batch, gp-mt, wr)");
}

inline constexpr int kFolds = 5;

inline constexpr const char* kPopulationTaskId = "population";

struct FoldSplit {
  int fold = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Seeded shuffle, then participants dealt round-robin into five folds. Ids
// within a fold keep cohort order.
inline std::vector<FoldSplit> make_folds(const Cohort& cohort, std::uint64_t seed) {
  const auto m = static_cast<int>(cohort.participants.size());
  if (m < kFolds)
    throw DomainError("five-fold split needs at least 5 participants, got " + std::to_string(m));
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  synth_detail::Rng rng(seed ^ 0xf01dULL);
  for (int i = m - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<int> fold_of(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) fold_of[order[k]] = k % kFolds;
  std::vector<FoldSplit> folds(kFolds);
  for (int f = 0; f < kFolds; ++f) {
    folds[f].fold = f;
    for (int i = 0; i < m; ++i)
      (fold_of[i] == f ? folds[f].test_ids : folds[f].train_ids)
          .push_back(cohort.participants[i].participant_id);
  }
  return folds;
}

struct PredictionRecord {
  std::string model;
  int fold = 0;
  std::string participant_id;
  int day_index = 0;
  int w = 0;
  int y_true = 0;
  double y_pred = 0.0;
  int window_position = 0;  // 0 for the first predicted window

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

enum class RefitCadence { Fold, Step };

struct EvalConfig {
  std::vector<ModelKind> models = all_models();
  std::vector<int> windows = {3, 5};
  int initial_days = 5;
  std::uint64_t seed = 42;
  bool clip = false;
  unsigned jobs = 1;
  RefitCadence pooled_refit = RefitCadence::Fold;  // GP-Batch and GP-MT
  GPFitConfig gp_ind{};
  GPFitConfig gp_batch{};
  MTGPFitConfig gp_mt{};
  double wr_delta_scale = 0.2;

  static EvalConfig defaults() {
    EvalConfig c;
    c.gp_ind.opt.max_iterations = 100;
    c.gp_batch.opt.max_iterations = 60;
    c.gp_mt.opt.max_iterations = 60;
    return c;
  }

  nlohmann::json to_json() const {
    std::vector<std::string> names;
    for (auto m : models) names.push_back(model_name(m));
    const auto opt_json = [](const OptConfig& o) {
      return nlohmann::json{{"max_iterations", o.max_iterations},
                            {"gradient_tolerance", o.gradient_tolerance},
                            {"relative_tolerance", o.relative_tolerance},
                            {"history", o.history}};
    };
    return {{"models", names},
            {"windows", windows},
            {"initial_days", initial_days},
            {"seed", seed},
            {"clip", clip},
            {"pooled_refit", pooled_refit == RefitCadence::Fold ? "fold" : "step"},
            {"gp_ind", {{"opt", opt_json(gp_ind.opt)}, {"noise_floor", gp_ind.noise_floor},
                        {"mean_prior_scale", gp_ind.mean_prior_scale}}},
            {"gp_batch", {{"opt", opt_json(gp_batch.opt)}, {"noise_floor", gp_batch.noise_floor},
                          {"mean_prior_scale", gp_batch.mean_prior_scale}}},
            {"gp_mt", {{"opt", opt_json(gp_mt.opt)}, {"noise_floor", gp_mt.noise_floor},
                       {"mean_prior_scale", gp_mt.mean_prior_scale}}},
            {"wr_delta_scale", wr_delta_scale}};
  }
};

inline void validate(const EvalConfig& cfg) {
  if (cfg.models.empty()) throw ConfigError("no models selected");
  if (cfg.windows.empty()) throw ConfigError("no window lengths selected");
  for (int w : cfg.windows)
    if (w < 1) throw ConfigError("window length must be >= 1");
  if (cfg.initial_days < 1) throw ConfigError("initial training days must be >= 1");
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

// Everything a fold's models share: feature scaling from the training
// participants and the models fit once per fold.
class FoldContext {
 public:
  FoldContext(const Cohort& cohort, const FoldSplit& split, const EvalConfig& cfg)
      : cohort_(&cohort), split_(split), cfg_(&cfg) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < cohort.participants.size(); ++i)
      index[cohort.participants[i].participant_id] = static_cast<int>(i);
    for (const auto& id : split.train_ids) train_.push_back(index.at(id));
    for (const auto& id : split.test_ids) test_.push_back(index.at(id));

    std::vector<DayRecord> train_records;
    for (int i : train_) {
      const auto& r = cohort.participants[i].records;
      train_records.insert(train_records.end(), r.begin(), r.end());
    }
    scaler_ = FeatureScaler::fit(train_records);
    for (const auto& p : cohort.participants) {
      x_.push_back(encode_matrix(p.records, cohort.weather_vocabulary, scaler_));
      y_.push_back(target_vector(p.records));
    }
    train_x_ = encode_matrix(train_records, cohort.weather_vocabulary, scaler_);
    train_y_ = target_vector(train_records);
  }

  const FoldSplit& split() const { return split_; }
  const std::vector<int>& test_indices() const { return test_; }
  const Eigen::MatrixXd& x(int participant) const { return x_[participant]; }
  const Eigen::VectorXd& y(int participant) const { return y_[participant]; }
  const Eigen::MatrixXd& train_x() const { return train_x_; }
  const Eigen::VectorXd& train_y() const { return train_y_; }
  std::vector<std::string>& warnings() { return warnings_; }

  void fit_shared(ModelKind m) {
    switch (m) {
      case ModelKind::Mean: mean_ = mean_fit(train_y_); break;
      case ModelKind::WR: wr_global_ = ols_fit(train_x_, train_y_); break;
      case ModelKind::GPBatch: fit_batch(); break;
      case ModelKind::GPMT: fit_mtgp(); break;
      case ModelKind::GPInd: break;
    }
  }

  const MeanBaseline& mean() const { return mean_.value(); }
  const LinearRegressor& wr_global() const { return wr_global_.value(); }
  const GPModel& batch() const { return batch_.value(); }
  const MTGPModel& mtgp_base() const { return mtgp_base_.value(); }
  const MTGPHyperparams& mtgp_hyper() const { return mtgp_hyper_.value(); }
  const Eigen::VectorXd& batch_whitened() const { return batch_z_; }
  const Eigen::VectorXd& mtgp_whitened() const { return mtgp_z_; }

 private:
  void fit_batch() {
    const auto& c = cfg_->gp_batch;
    try {
      batch_ = gp_fit(train_x_, train_y_, c);
    } catch (const GPFitError& e) {
      warn("gp-batch fit stopped early: " + std::string(e.what()));
      batch_ = GPModel::condition(e.last_hyperparams(), train_x_, train_y_);
    }
    batch_z_ = AugmentedPosterior::whiten(batch_->cholesky(),
                                          train_y_.array() - batch_->hyperparams().mean_constant);
  }

  // Tasks are the training participants. A test participant joins as one
  // extra task exchangeable with them (see extend_with_population_task);
  // their own days enter only through conditioning.
  void fit_mtgp() {
    std::vector<Eigen::MatrixXd> xs;
    std::vector<Eigen::VectorXd> ys;
    for (int i : train_) {
      xs.push_back(x_[i]);
      ys.push_back(y_[i]);
    }
    const TaskSet fit_data = TaskSet::from_tasks(xs, ys);
    MTGPHyperparams fitted;
    try {
      fitted = mtgp_fit(fit_data, cfg_->gp_mt).hyperparams();
    } catch (const MTGPFitError& e) {
      warn("gp-mt fit stopped early: " + std::string(e.what()));
      fitted = e.last_hyperparams();
    }
    mtgp_hyper_ = extend_with_population_task(fitted);
    xs.emplace_back(0, x_.front().cols());
    ys.emplace_back(0);
    mtgp_base_ = MTGPModel::condition(*mtgp_hyper_, TaskSet::from_tasks(xs, ys));
    mtgp_z_ = AugmentedPosterior::whiten(
        mtgp_base_->cholesky(), mtgp_base_->data().y.array() - mtgp_hyper_->mean_constant);
  }

  void warn(const std::string& msg) {
    std::lock_guard lock(mutex_);
    warnings_.push_back("fold " + std::to_string(split_.fold) + ": " + msg);
  }

  const Cohort* cohort_;
  FoldSplit split_;
  const EvalConfig* cfg_;
  std::vector<int> train_, test_;
  FeatureScaler scaler_;
  std::vector<Eigen::MatrixXd> x_;
  std::vector<Eigen::VectorXd> y_;
  Eigen::MatrixXd train_x_;
  Eigen::VectorXd train_y_;
  std::optional<MeanBaseline> mean_;
  std::optional<LinearRegressor> wr_global_;
  std::optional<GPModel> batch_;
  Eigen::VectorXd batch_z_;
  std::optional<MTGPHyperparams> mtgp_hyper_;
  std::optional<MTGPModel> mtgp_base_;
  Eigen::VectorXd mtgp_z_;
  std::vector<std::string> warnings_;
  std::mutex mutex_;

 public:
  void add_warning(const std::string& msg) { warn(msg); }
};

namespace eval_detail {

// Predictions for days [t, end) of `participant` given its days [0, t).
inline std::vector<double> predict_window(ModelKind kind, FoldContext& ctx, const EvalConfig& cfg,
                                          int participant, int t, int end) {
  const Eigen::MatrixXd& x = ctx.x(participant);
  const Eigen::VectorXd& y = ctx.y(participant);
  const Eigen::MatrixXd xb = x.topRows(t);
  const Eigen::VectorXd yb = y.head(t);
  std::vector<double> out;
  switch (kind) {
    case ModelKind::Mean:
      for (int d = t; d < end; ++d) out.push_back(mean_predict(ctx.mean()));
      break;
    case ModelKind::GPInd: {
      GPModel model;
      try {
        model = gp_fit(xb, yb, cfg.gp_ind);
      } catch (const GPFitError& e) {
        ctx.add_warning("gp-ind fit for participant index " + std::to_string(participant) +
                        " at t=" + std::to_string(t) + " stopped early: " + e.what());
        model = GPModel::condition(e.last_hyperparams(), xb, yb);
      }
      for (int d = t; d < end; ++d) out.push_back(model.predict(x.row(d).transpose()).mean);
      break;
    }
    case ModelKind::GPBatch: {
      if (cfg.pooled_refit == RefitCadence::Step) {
        Eigen::MatrixXd xa(ctx.train_x().rows() + t, x.cols());
        xa << ctx.train_x(), xb;
        Eigen::VectorXd ya(xa.rows());
        ya << ctx.train_y(), yb;
        const GPModel model = gp_fit(xa, ya, cfg.gp_batch);
        for (int d = t; d < end; ++d) out.push_back(model.predict(x.row(d).transpose()).mean);
        break;
      }
      const GPModel& base = ctx.batch();
      const auto& h = base.hyperparams();
      const Eigen::MatrixXd cross = h.signal_variance * rbf_correlation(base.train_x(), xb, h.lengthscale);
      Eigen::MatrixXd kbb = h.signal_variance * rbf_correlation(xb, h.lengthscale);
      kbb.diagonal().array() += h.noise_variance;
      const AugmentedPosterior post(base.cholesky(), ctx.batch_whitened(), cross, kbb,
                                    yb.array() - h.mean_constant, h.signal_variance);
      for (int d = t; d < end; ++d) {
        const Eigen::MatrixXd xd = x.row(d);
        const Eigen::VectorXd ka = h.signal_variance * rbf_correlation(base.train_x(), xd, h.lengthscale).col(0);
        const Eigen::VectorXd kb = h.signal_variance * rbf_correlation(xb, xd, h.lengthscale).col(0);
        out.push_back(post.predict(ka, kb, h.signal_variance, h.mean_constant).mean);
      }
      break;
    }
    case ModelKind::GPMT: {
      const MTGPModel& base = ctx.mtgp_base();
      const auto& h = ctx.mtgp_hyper();
      const Eigen::MatrixXd& kf = base.task_covariance();
      const TaskSet& data = base.data();
      const int j = h.num_tasks() - 1;  // the test participant's task
      Eigen::MatrixXd cross = rbf_correlation(data.x, xb, h.lengthscale);
      for (Eigen::Index p = 0; p < cross.rows(); ++p) cross.row(p) *= kf(data.task[p], j);
      Eigen::MatrixXd kbb = kf(j, j) * rbf_correlation(xb, h.lengthscale);
      kbb.diagonal().array() += h.task_noises[j];
      const AugmentedPosterior post(base.cholesky(), ctx.mtgp_whitened(), cross, kbb,
                                    yb.array() - h.mean_constant, kf.diagonal().maxCoeff());
      for (int d = t; d < end; ++d) {
        const Eigen::MatrixXd xd = x.row(d);
        Eigen::VectorXd ka = rbf_correlation(data.x, xd, h.lengthscale).col(0);
        for (Eigen::Index p = 0; p < ka.size(); ++p) ka[p] *= kf(data.task[p], j);
        const Eigen::VectorXd kb = kf(j, j) * rbf_correlation(xb, xd, h.lengthscale).col(0);
        out.push_back(post.predict(ka, kb, kf(j, j) + h.task_noises[j], h.mean_constant).mean);
      }
      break;
    }
    case ModelKind::WR:
      break;  // handled per participant by wr_run
  }
  return out;
}

}  // namespace eval_detail

// Sliding-window forecasts of one model for every test participant of a
// fold. Fold-level models must already be fit via ctx.fit_shared(kind).
inline std::vector<PredictionRecord> run_model(ModelKind kind, FoldContext& ctx,
                                               const Cohort& cohort, int w, int s,
                                               const EvalConfig& cfg,
                                               std::optional<int> only_participant = std::nullopt) {
  if (w < 1 || s < 1) throw DomainError("run_model: w and s must be >= 1");
  std::vector<PredictionRecord> out;
  for (int j : ctx.test_indices()) {
    if (only_participant && *only_participant != j) continue;
    const auto& series = cohort.participants[j];
    const int len = static_cast<int>(series.records.size());
    if (len <= s) {
      ctx.add_warning("participant " + series.participant_id + " has " + std::to_string(len) +
                      " days, none after the initial " + std::to_string(s) + "; skipped");
      continue;
    }
    const auto emit = [&](int day, double pred, int position) {
      if (cfg.clip) pred = std::clamp(pred, 0.0, static_cast<double>(kMaxSedentaryCount));
      out.push_back({model_name(kind), ctx.split().fold, series.participant_id, day, w,
                     series.records[day].target, pred, position});
    };
    if (kind == ModelKind::WR) {
      WRConfig wc;
      wc.window = w;
      wc.initial_days = s;
      wc.delta_scale = cfg.wr_delta_scale;
      const WRRun run = wr_run(ctx.x(j), ctx.y(j), ctx.wr_global(), wc);
      for (std::size_t k = 0; k < run.steps.size(); ++k)
        for (const auto& p : run.steps[k].predictions) emit(p.day, p.value, static_cast<int>(k));
      continue;
    }
    int position = 0;
    for (int t = s; t < len; t += w, ++position) {
      const int end = std::min(t + w, len);
      const auto preds = eval_detail::predict_window(kind, ctx, cfg, j, t, end);
      for (int d = t; d < end; ++d) emit(d, preds[static_cast<std::size_t>(d - t)], position);
    }
  }
  return out;
}

struct MseCell {
  int key = 0;  // day index or window position
  double mse = 0.0;
  std::size_t n = 0;
};

struct ModelSummary {
  std::string model;
  int w = 0;
  double overall_mse = 0.0;
  std::size_t n = 0;
  std::vector<MseCell> by_day;
  std::vector<MseCell> by_window_position;
};

// Fitted GP-MT of one fold. Tasks are the training participants in fold
// order followed by the population task that test participants join.
struct FoldTaskModel {
  int fold = 0;
  std::vector<std::string> task_ids;
  nlohmann::json model;
  Eigen::MatrixXd task_covariance;
};

struct EvalResult {
  std::vector<PredictionRecord> records;
  std::vector<ModelSummary> summaries;  // ordered by model, then w
  std::vector<FoldTaskModel> task_models;  // empty unless gp-mt ran
  nlohmann::json config;
  std::vector<std::string> warnings;

  const ModelSummary& summary(const std::string& model, int w) const {
    for (const auto& s : summaries)
      if (s.model == model && s.w == w) return s;
    throw DomainError("no summary for model " + model + " w=" + std::to_string(w));
  }
};

inline std::vector<ModelSummary> aggregate(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw DomainError("aggregate: no prediction records");
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double e) { sum += e, ++n; }
  };
  std::vector<std::pair<std::string, int>> keys;
  std::map<std::pair<std::string, int>, Acc> overall;
  std::map<std::pair<std::string, int>, std::map<int, Acc>> by_day, by_pos;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.model, r.w);
    if (!overall.count(key)) keys.push_back(key);
    const double err = (r.y_true - r.y_pred) * (r.y_true - r.y_pred);
    overall[key].add(err);
    by_day[key][r.day_index].add(err);
    by_pos[key][r.window_position].add(err);
  }
  std::vector<ModelSummary> out;
  for (const auto& key : keys) {
    ModelSummary s;
    s.model = key.first;
    s.w = key.second;
    s.n = overall[key].n;
    s.overall_mse = overall[key].sum / static_cast<double>(s.n);
    for (const auto& [d, a] : by_day[key]) s.by_day.push_back({d, a.sum / a.n, a.n});
    for (const auto& [p, a] : by_pos[key]) s.by_window_position.push_back({p, a.sum / a.n, a.n});
    out.push_back(std::move(s));
  }
  return out;
}

// Full protocol: five participant folds, every model and window length.
inline EvalResult evaluate(const Cohort& cohort, const EvalConfig& cfg) {
  validate(cfg);
  validate_cohort(cohort);
  const auto folds = make_folds(cohort, cfg.seed);
  std::vector<std::unique_ptr<FoldContext>> contexts;
  for (const auto& f : folds) contexts.push_back(std::make_unique<FoldContext>(cohort, f, cfg));

  std::vector<std::pair<std::size_t, ModelKind>> fits;
  for (std::size_t f = 0; f < contexts.size(); ++f)
    for (auto m : cfg.models) fits.emplace_back(f, m);
  parallel_for(fits.size(), cfg.jobs,
               [&](std::size_t i) { contexts[fits[i].first]->fit_shared(fits[i].second); });

  // one slot per (model, w, fold, test participant), filled in parallel
  struct Slot {
    ModelKind model;
    int w;
    std::size_t fold;
    int participant;
    std::vector<PredictionRecord> records;
  };
  std::vector<Slot> slots;
  for (auto m : cfg.models)
    for (int w : cfg.windows)
      for (std::size_t f = 0; f < contexts.size(); ++f)
        for (int j : contexts[f]->test_indices()) slots.push_back({m, w, f, j, {}});
  parallel_for(slots.size(), cfg.jobs, [&](std::size_t i) {
    auto& s = slots[i];
    s.records = run_model(s.model, *contexts[s.fold], cohort, s.w, cfg.initial_days, cfg, s.participant);
  });

  EvalResult result;
  for (auto& s : slots)
    result.records.insert(result.records.end(), s.records.begin(), s.records.end());
  result.summaries = aggregate(result.records);
  result.config = cfg.to_json();
  if (std::find(cfg.models.begin(), cfg.models.end(), ModelKind::GPMT) != cfg.models.end())
    for (const auto& c : contexts) {
      FoldTaskModel tm;
      tm.fold = c->split().fold;
      tm.task_ids = c->split().train_ids;
      tm.task_ids.push_back(kPopulationTaskId);
      tm.model = c->mtgp_base().to_json("day records, fold " + std::to_string(tm.fold) + " training participants");
      tm.model["task_ids"] = tm.task_ids;
      tm.task_covariance = c->mtgp_base().task_covariance();
      result.task_models.push_back(std::move(tm));
    }
  for (const auto& c : contexts) {
    auto w = c->warnings();
    std::sort(w.begin(), w.end());
    result.warnings.insert(result.warnings.end(), w.begin(), w.end());
  }
  return result;
}

inline constexpr const char* kRecordsHeader = "model,fold,participant_id,day_index,w,y_true,y_pred";

inline std::string write_records_csv(const std::vector<PredictionRecord>& records) {
  std::ostringstream out;
  out << kRecordsHeader << '\n';
  for (const auto& r : records)
    out << r.model << ',' << r.fold << ',' << r.participant_id << ',' << r.day_index << ','
        << r.w << ',' << r.y_true << ',' << csv::format_double(r.y_pred) << '\n';
  return out.str();
}

// Window positions are recovered as (day_index - s) / w.
inline std::vector<PredictionRecord> parse_records_csv(const std::string& text, int initial_days) {
  std::istringstream in(text);
  const auto lines = csv::read_lines(in);
  if (lines.empty() || csv::trim(lines[0]) != kRecordsHeader)
    throw ParseError(1, std::string("expected header '") + kRecordsHeader + "'");
  std::vector<PredictionRecord> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (csv::trim(lines[ln]).empty()) continue;
    const auto f = csv::split(lines[ln]);
    if (f.size() != 7) throw ParseError(ln + 1, "expected 7 fields");
    PredictionRecord r;
    r.model = std::string(f[0]);
    r.fold = csv::parse_int<int>(f[1], ln + 1, "fold");
    r.participant_id = std::string(f[2]);
    r.day_index = csv::parse_int<int>(f[3], ln + 1, "day_index");
    r.w = csv::parse_int<int>(f[4], ln + 1, "w");
    r.y_true = csv::parse_int<int>(f[5], ln + 1, "y_true");
    r.y_pred = csv::parse_double(f[6], ln + 1, "y_pred");
    r.window_position = r.w > 0 ? (r.day_index - initial_days) / r.w : 0;
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json summary_json(const EvalResult& result) {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& s : result.summaries) {
    nlohmann::json by_day = nlohmann::json::array(), by_pos = nlohmann::json::array();
    for (const auto& c : s.by_day) by_day.push_back({{"day_index", c.key}, {"mse", c.mse}, {"n", c.n}});
    for (const auto& c : s.by_window_position)
      by_pos.push_back({{"window_position", c.key}, {"mse", c.mse}, {"n", c.n}});
    models[s.model][std::to_string(s.w)] = {{"overall_mse", s.overall_mse},
                                            {"n", s.n},
                                            {"mse_by_day_index", by_day},
                                            {"mse_by_window_position", by_pos}};
  }
  return {{"config", result.config}, {"models", models}, {"warnings", result.warnings}};
}

// Bar chart data: one row per (model, w).
inline std::string write_overall_mse_csv(const std::vector<ModelSummary>& summaries) {
  std::ostringstream out;
  out << "model,w,mse,n\n";
  for (const auto& s : summaries)
    out << s.model << ',' << s.w << ',' << csv::format_double(s.overall_mse) << ',' << s.n << '\n';
  return out.str();
}

// Line chart data: MSE against day in study.
inline std::string write_mse_by_day_csv(const std::vector<ModelSummary>& summaries) {
  std::ostringstream out;
  out << "model,w,day_index,mse,n\n";
  for (const auto& s : summaries)
    for (const auto& c : s.by_day)
      out << s.model << ',' << s.w << ',' << c.key << ',' << csv::format_double(c.mse) << ','
          << c.n << '\n';
  return out.str();
}

inline std::string write_mse_by_window_csv(const std::vector<ModelSummary>& summaries) {
  std::ostringstream out;
  out << "model,w,window_position,mse,n\n";
  for (const auto& s : summaries)
    for (const auto& c : s.by_window_position)
      out << s.model << ',' << s.w << ',' << c.key << ',' << csv::format_double(c.mse) << ','
          << c.n << '\n';
  return out.str();
}

}  // namespace sedentary
