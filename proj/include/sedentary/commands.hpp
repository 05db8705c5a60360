#pragma once

#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedentary/csv.hpp"
#include "sedentary/dtw.hpp"
#include "sedentary/error.hpp"
#include "sedentary/evaluation.hpp"
#include "sedentary/ingest.hpp"
#include "sedentary/records.hpp"
#include "sedentary/stationarity.hpp"
#include "sedentary/synth.hpp"

// Implementations behind the `sedpred` subcommands. Each writes its outputs
// plus a run_config.json snapshot into the output directory.
namespace sedentary::commands {

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("E_USAGE", what) {}
};

namespace fs = std::filesystem;

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path))
    throw UsageError(std::string(what) + " '" + path + "' does not exist");
}

inline fs::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw UsageError("missing output directory");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
  return fs::path(out);
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  csv::write_file(path.string(), j.dump(2) + "\n");
}

inline std::vector<WeatherCategory> load_vocabulary(const std::string& path) {
  if (path.empty()) return default_weather_vocabulary();
  require_file(path, "vocabulary file");
  return parse_vocabulary(csv::read_file(path));
}

inline Cohort load_day_records(const std::string& path, const std::string& vocab_path) {
  require_file(path, "day-records file");
  return parse_day_records_csv(csv::read_file(path), load_vocabulary(vocab_path));
}

// Square matrix with an id header row and id first column.
inline std::string matrix_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  out << "participant_id";
  for (const auto& id : ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << csv::format_double(m(i, j));
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
  std::string steps_path;
  std::string weather_path;
  std::string vocab_path;
  std::string out_dir;
};

struct IngestOutcome {
  Cohort cohort;
  IngestReport report;
};

inline IngestOutcome cmd_ingest(const IngestOptions& o) {
  require_file(o.steps_path, "steps file");
  require_file(o.weather_path, "weather file");
  const auto vocab = load_vocabulary(o.vocab_path);
  const auto out = prepare_out_dir(o.out_dir);
  const auto streams = parse_step_stream(csv::read_file(o.steps_path));
  const auto weather = parse_weather_csv(csv::read_file(o.weather_path), vocab);
  IngestOutcome res;
  res.cohort = ingest_cohort(streams, weather, vocab, res.report);
  csv::write_file((out / "day_records.csv").string(), write_day_records_csv(res.cohort));

  nlohmann::json dropped = nlohmann::json::array(), rejected = nlohmann::json::array();
  for (const auto& [id, d] : res.report.dropped_days)
    dropped.push_back({{"participant_id", id}, {"date", format_date(d.date)}, {"reason", d.reason}});
  for (const auto& r : res.report.rejected)
    rejected.push_back({{"participant_id", r.participant_id},
                        {"reason", to_string(r.reason)},
                        {"usable_days", r.usable_days}});
  std::size_t records = 0;
  for (const auto& p : res.cohort.participants) records += p.records.size();
  write_json(out / "ingest_report.json", {{"participants_in", streams.size()},
                                          {"participants_accepted", res.report.accepted},
                                          {"day_records", records},
                                          {"dropped_days", dropped},
                                          {"rejected_participants", rejected}});
  write_json(out / "run_config.json", {{"command", "ingest"},
                                       {"steps", o.steps_path},
                                       {"weather", o.weather_path},
                                       {"vocab", o.vocab_path},
                                       {"out", o.out_dir}});
  return res;
}

// ----------------------------------------------------------------- synth

inline SynthCohort cmd_synth(const SynthConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto out = prepare_out_dir(out_dir);
  SynthCohort sc = generate(cfg);
  csv::write_file((out / "day_records.csv").string(), write_day_records_csv(sc.cohort));
  write_json(out / "ground_truth.json", sc.truth_json());
  write_json(out / "run_config.json", {{"command", "synth"}, {"config", cfg.to_json()}, {"out", out_dir}});
  return sc;
}

// -------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string records_path;
  std::string vocab_path;
  std::string out_dir;
  EvalConfig config = EvalConfig::defaults();
};

inline EvalResult cmd_evaluate(const EvaluateOptions& o) {
  validate(o.config);
  const Cohort cohort = load_day_records(o.records_path, o.vocab_path);
  const auto out = prepare_out_dir(o.out_dir);
  EvalResult res = evaluate(cohort, o.config);
  csv::write_file((out / "records.csv").string(), write_records_csv(res.records));
  write_json(out / "summary.json", summary_json(res));
  csv::write_file((out / "fig3_overall_mse.csv").string(), write_overall_mse_csv(res.summaries));
  csv::write_file((out / "fig4_mse_by_day.csv").string(), write_mse_by_day_csv(res.summaries));
  csv::write_file((out / "mse_by_window_position.csv").string(),
                  write_mse_by_window_csv(res.summaries));
  for (const auto& tm : res.task_models) {
    const std::string f = std::to_string(tm.fold);
    csv::write_file((out / ("task_covariance_fold" + f + ".csv")).string(),
                    matrix_csv(tm.task_ids, tm.task_covariance));
    write_json(out / ("gp_mt_fold" + f + ".json"), tm.model);
  }
  write_json(out / "run_config.json", {{"command", "evaluate"},
                                       {"records", o.records_path},
                                       {"vocab", o.vocab_path},
                                       {"out", o.out_dir},
                                       {"config", o.config.to_json()}});
  return res;
}

// --------------------------------------------------------------- analyze

enum class AnalyzeMode { Stationarity, Dtw };

inline AnalyzeMode parse_analyze_mode(const std::string& s) {
  if (s == "stationarity") return AnalyzeMode::Stationarity;
  if (s == "dtw") return AnalyzeMode::Dtw;
  throw UsageError("unknown analyze mode '" + s + "' (valid: stationarity, dtw)");
}

struct AnalyzeOptions {
  std::string records_path;
  std::string vocab_path;
  std::string out_dir;
  AnalyzeMode mode = AnalyzeMode::Stationarity;
  std::vector<int> window_lengths = {1, 2, 5, 10};
  StationarityConfig stationarity{};
  SequenceKind sequence = SequenceKind::SedentaryCounts;
  unsigned jobs = 1;
};

struct StationarityRow {
  std::string participant_id;
  int window_length = 0;
  std::optional<StationarityResult> result;  // empty when the test is degenerate
};

struct AnalyzeOutcome {
  std::vector<StationarityRow> stationarity;
  std::optional<SimilarityMatrix> similarity;
};


inline AnalyzeOutcome cmd_analyze(const AnalyzeOptions& o) {
  const Cohort cohort = load_day_records(o.records_path, o.vocab_path);
  const auto out = prepare_out_dir(o.out_dir);
  AnalyzeOutcome res;
  nlohmann::json cfg = {{"command", "analyze"}, {"records", o.records_path}, {"out", o.out_dir}};
  if (o.mode == AnalyzeMode::Dtw) {
    res.similarity = similarity_matrix(cohort, o.sequence, o.jobs);
    csv::write_file((out / "dtw_distance.csv").string(),
                    matrix_csv(res.similarity->participant_ids, res.similarity->distances));
    csv::write_file((out / "dtw_similarity.csv").string(),
                    matrix_csv(res.similarity->participant_ids, res.similarity->similarities()));
    cfg["mode"] = "dtw";
  } else {
    if (o.window_lengths.empty()) throw UsageError("no window lengths given");
    std::ostringstream rows, summary;
    rows << "participant_id,window_length,k,statistic,dof,threshold,reject\n";
    summary << "window_length,participants,tested,rejected,reject_fraction\n";
    for (int wl : o.window_lengths) {
      int tested = 0, rejected = 0;
      for (const auto& p : cohort.participants) {
        StationarityRow row{p.participant_id, wl, std::nullopt};
        try {
          row.result = stationarity_test(p, wl, o.stationarity);
        } catch (const DegenerateTestError&) {
        }
        if (row.result) {
          const auto& r = *row.result;
          ++tested;
          rejected += r.reject_null ? 1 : 0;
          rows << p.participant_id << ',' << wl << ',' << r.k << ',' << csv::format_double(r.statistic)
               << ',' << r.dof << ',' << csv::format_double(r.threshold) << ','
               << (r.reject_null ? "true" : "false") << '\n';
        } else {
          rows << p.participant_id << ',' << wl << ',' << p.records.size() / wl
               << ",NA,NA,NA,degenerate\n";
        }
        res.stationarity.push_back(std::move(row));
      }
      summary << wl << ',' << cohort.participants.size() << ',' << tested << ',' << rejected << ','
              << (tested > 0 ? csv::format_double(static_cast<double>(rejected) / tested) : "NA")
              << '\n';
    }
    csv::write_file((out / "stationarity.csv").string(), rows.str());
    csv::write_file((out / "stationarity_summary.csv").string(), summary.str());
    cfg["mode"] = "stationarity";
    cfg["window_lengths"] = o.window_lengths;
    cfg["alpha"] = o.stationarity.alpha;
    cfg["dof"] = to_string(o.stationarity.dof);
    cfg["features"] =
        o.stationarity.features == StationarityFeatures::Continuous ? "continuous" : "full";
  }
  write_json(out / "run_config.json", cfg);
  return res;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::string summary_path;
  std::string stationarity_summary_path;
  std::string similarity_path;
  std::string out_path;
};

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string cmd_report(const ReportOptions& o) {
  require_file(o.summary_path, "summary file");
  if (o.out_path.empty()) throw UsageError("missing report output path");
  const auto summary = nlohmann::json::parse(csv::read_file(o.summary_path));
  const auto& models = summary.at("models");
  std::set<int> windows;
  for (const auto& [name, per_w] : models.items())
    for (const auto& [w, _] : per_w.items()) windows.insert(std::stoi(w));

  std::ostringstream md;
  md << "# Sedentary-period prediction report\n\n";
  md << "## Overall MSE by model\n\n| model |";
  for (int w : windows) md << " w=" << w << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < windows.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& [name, per_w] : models.items()) {
    md << "| " << name << " |";
    for (int w : windows) {
      const auto key = std::to_string(w);
      md << ' ' << (per_w.contains(key) ? fixed(per_w[key]["overall_mse"].get<double>()) : "-") << " |";
    }
    md << '\n';
  }

  const auto keyed_table = [&](const char* title, const char* array, const char* key) {
    for (int w : windows) {
      std::map<int, std::map<std::string, double>> rows;
      std::vector<std::string> names;
      for (const auto& [name, per_w] : models.items()) {
        const auto wk = std::to_string(w);
        if (!per_w.contains(wk)) continue;
        names.push_back(name);
        for (const auto& c : per_w[wk][array]) rows[c[key].get<int>()][name] = c["mse"].get<double>();
      }
      md << "\n## " << title << " (w=" << w << ")\n\n| " << key << " |";
      for (const auto& n : names) md << ' ' << n << " |";
      md << "\n|---|";
      for (std::size_t i = 0; i < names.size(); ++i) md << "---|";
      md << '\n';
      for (const auto& [k, vals] : rows) {
        md << "| " << k << " |";
        for (const auto& n : names)
          md << ' ' << (vals.count(n) ? fixed(vals.at(n)) : "-") << " |";
        md << '\n';
      }
    }
  };
  keyed_table("MSE by day in study", "mse_by_day_index", "day_index");
  keyed_table("MSE by sliding-window position", "mse_by_window_position", "window_position");

  if (!o.stationarity_summary_path.empty()) {
    require_file(o.stationarity_summary_path, "stationarity summary");
    std::istringstream in(csv::read_file(o.stationarity_summary_path));
    const auto lines = csv::read_lines(in);
    md << "\n## Within-person stationarity\n\n| window length | tested | rejected | fraction |\n"
          "|---|---|---|---|\n";
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto f = csv::split(lines[i]);
      if (f.size() != 5) continue;
      md << "| " << f[0] << " | " << f[2] << " | " << f[3] << " | " << f[4] << " |\n";
    }
  }
  if (!o.similarity_path.empty()) {
    require_file(o.similarity_path, "similarity matrix");
    std::istringstream in(csv::read_file(o.similarity_path));
    const auto lines = csv::read_lines(in);
    double sum = 0.0, lo = 1.0, hi = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto f = csv::split(lines[i]);
      for (std::size_t j = 1; j < f.size(); ++j) {
        if (j == i) continue;
        const double v = csv::parse_double(f[j], i + 1, "similarity");
        sum += v, ++n, lo = std::min(lo, v), hi = std::max(hi, v);
      }
    }
    md << "\n## Between-person similarity (1 / (1 + DTW))\n\n";
    if (n == 0)
      md << "Single participant; no pairs.\n";
    else
      md << "| pairs | mean | min | max |\n|---|---|---|---|\n| " << n / 2 << " | "
         << fixed(sum / n) << " | " << fixed(lo) << " | " << fixed(hi) << " |\n";
  }
  csv::write_file(o.out_path, md.str());
  return md.str();
}

}  // namespace sedentary::commands
