// sedpred: command-line driver for ingestion, synthesis, evaluation,
// analysis and reporting.

#include <algorithm>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sedentary/commands.hpp"

namespace cmd = sedentary::commands;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto f : sedentary::csv::split(s)) {
    auto t = sedentary::csv::trim(f);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& f : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(f, &used));
      if (used != f.size()) throw std::invalid_argument(f);
    } catch (const std::exception&) {
      throw cmd::UsageError(std::string("invalid ") + what + " '" + f + "'");
    }
  }
  return out;
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : ",") + json_scalar(e);
    return out;
  }
  return v.dump();
}

// Appends `--key value` pairs from the --config JSON after the command-line
// arguments; every option keeps its last value, so the file wins.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  cmd::require_file(path, "config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(sedentary::csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw sedentary::ConfigError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw sedentary::ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
      continue;
    }
    args.push_back("--" + key);
    args.push_back(json_scalar(value));
  }
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"Sedentary-period prediction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file whose keys override command-line flags");

  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());

  // ingest
  cmd::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build day records from raw step streams");
  ingest_cmd->add_option("--steps", ingest.steps_path, "Minute-level steps CSV")->required();
  ingest_cmd->add_option("--weather", ingest.weather_path, "Daily weather CSV")->required();
  ingest_cmd->add_option("--vocab", ingest.vocab_path, "Weather vocabulary, one description per line");
  ingest_cmd->add_option("--out", ingest.out_dir, "Output directory")->required();

  // synth
  sedentary::SynthConfig synth;
  std::string synth_out, nonstationarity = "drift";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic cohort");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--participants", synth.participants);
  synth_cmd->add_option("--days", synth.days);
  synth_cmd->add_option("--day-jitter", synth.day_jitter);
  synth_cmd->add_option("--rho", synth.shared_weight, "Weight of the shared response function");
  synth_cmd->add_option("--nonstationarity", nonstationarity, "none, drift or regime");
  synth_cmd->add_option("--drift-rate", synth.drift_rate);
  synth_cmd->add_option("--change-day", synth.change_day);
  synth_cmd->add_option("--change-magnitude", synth.change_magnitude);
  synth_cmd->add_option("--noise-sd", synth.noise_sd);
  synth_cmd->add_option("--clusters", synth.cluster_count);
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  // evaluate
  cmd::EvaluateOptions eval;
  eval.config.jobs = cores;
  std::string models = "mean,gp-ind,gp-batch,gp-mt,wr", windows = "3,5", pooled_refit = "fold";
  auto* eval_cmd = app.add_subcommand("evaluate", "Sliding-window five-fold evaluation");
  eval_cmd->add_option("--records", eval.records_path, "Day-records CSV")->required();
  eval_cmd->add_option("--vocab", eval.vocab_path);
  eval_cmd->add_option("--models", models, "Comma-separated model names");
  eval_cmd->add_option("-w,--windows", windows, "Comma-separated forecast window lengths");
  eval_cmd->add_option("-s,--initial-days", eval.config.initial_days);
  eval_cmd->add_option("--seed", eval.config.seed, "Fold assignment seed");
  eval_cmd->add_flag("--clip", eval.config.clip, "Clip predictions to [0, 9]");
  eval_cmd->add_option("--pooled-refit", pooled_refit, "fold or step");
  eval_cmd->add_option("--gp-ind-iterations", eval.config.gp_ind.opt.max_iterations);
  eval_cmd->add_option("--gp-batch-iterations", eval.config.gp_batch.opt.max_iterations);
  eval_cmd->add_option("--gp-mt-iterations", eval.config.gp_mt.opt.max_iterations);
  eval_cmd->add_option("--wr-delta-scale", eval.config.wr_delta_scale);
  eval_cmd->add_option("--jobs", eval.config.jobs, "Worker threads");
  eval_cmd->add_option("--out", eval.out_dir, "Output directory")->required();

  // analyze
  cmd::AnalyzeOptions analyze;
  analyze.jobs = cores;
  std::string mode, window_lengths = "1,2,5,10", dof = "windows", features = "continuous",
                    sequence = "sedentary";
  auto* analyze_cmd = app.add_subcommand("analyze", "Stationarity test or DTW similarity");
  analyze_cmd->add_option("--records", analyze.records_path, "Day-records CSV")->required();
  analyze_cmd->add_option("--vocab", analyze.vocab_path);
  analyze_cmd->add_option("--mode", mode, "stationarity or dtw")->required();
  analyze_cmd->add_option("--window-lengths", window_lengths);
  analyze_cmd->add_option("--alpha", analyze.stationarity.alpha);
  analyze_cmd->add_option("--dof", dof, "windows or parameters");
  analyze_cmd->add_option("--features", features, "continuous or full");
  analyze_cmd->add_option("--sequence", sequence, "sedentary, morning-steps or prev-total-steps");
  analyze_cmd->add_option("--jobs", analyze.jobs);
  analyze_cmd->add_option("--out", analyze.out_dir, "Output directory")->required();

  // report
  cmd::ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Markdown summary of evaluation and analysis outputs");
  report_cmd->add_option("--summary", report.summary_path, "summary.json from evaluate")->required();
  report_cmd->add_option("--stationarity", report.stationarity_summary_path,
                         "stationarity_summary.csv from analyze");
  report_cmd->add_option("--similarity", report.similarity_path, "dtw_similarity.csv from analyze");
  report_cmd->add_option("--out", report.out_path, "Markdown output path")->required();

  auto args = expand_config(std::vector<std::string>(argv + 1, argv + argc));
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw cmd::UsageError(e.what());
  }

  if (*ingest_cmd) {
    const auto res = cmd::cmd_ingest(ingest);
    std::cerr << "ingest: " << res.report.accepted << " participants accepted, "
              << res.report.rejected.size() << " rejected\n";
  } else if (*synth_cmd) {
    synth.nonstationarity = sedentary::parse_nonstationarity(nonstationarity);
    cmd::cmd_synth(synth, synth_out);
  } else if (*eval_cmd) {
    eval.config.models.clear();
    for (const auto& m : split_list(models)) {
      try {
        eval.config.models.push_back(sedentary::parse_model(m));
      } catch (const sedentary::ConfigError& e) {
        throw cmd::UsageError(e.what());
      }
    }
    eval.config.windows = parse_int_list(windows, "window length");
    if (pooled_refit == "fold") eval.config.pooled_refit = sedentary::RefitCadence::Fold;
    else if (pooled_refit == "step") eval.config.pooled_refit = sedentary::RefitCadence::Step;
    else throw cmd::UsageError("unknown --pooled-refit '" + pooled_refit + "' (valid: fold, step)");
    const auto res = cmd::cmd_evaluate(eval);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  } else if (*analyze_cmd) {
    analyze.mode = cmd::parse_analyze_mode(mode);
    analyze.window_lengths = parse_int_list(window_lengths, "window length");
    analyze.stationarity.dof = sedentary::parse_dof_mode(dof);
    analyze.stationarity.features = sedentary::parse_stationarity_features(features);
    analyze.sequence = sedentary::parse_sequence_kind(sequence);
    cmd::cmd_analyze(analyze);
  } else if (*report_cmd) {
    cmd::cmd_report(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sedentary::Error& e) {
    std::cerr << e.code() << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << '\n';
  }
  return 1;
}
