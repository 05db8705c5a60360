#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sedentary/csv.hpp"
#include "sedentary/error.hpp"
#include "sedentary/records.hpp"

namespace sedentary {

using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

// Minutes since midnight.
struct TimeOfDay {
  int minutes = 0;
  static constexpr TimeOfDay hm(int h, int m = 0) { return {h * 60 + m}; }
};

inline constexpr TimeOfDay kContextStart = TimeOfDay::hm(9);
inline constexpr TimeOfDay kTargetStart = TimeOfDay::hm(15);
inline constexpr TimeOfDay kTargetEnd = TimeOfDay::hm(21);
inline constexpr int kSedentaryIntervalMinutes = 40;
inline constexpr std::int64_t kSedentaryStepThreshold = 140;

struct StepSample {
  Timestamp time;
  std::int64_t steps = 0;
};

struct StepStream {
  std::string participant_id;
  std::vector<StepSample> samples;
};

inline Date date_of(Timestamp t) {
  return Date{std::chrono::floor<std::chrono::days>(t)};
}

inline int minute_of_day(Timestamp t) {
  return static_cast<int>((t - std::chrono::floor<std::chrono::days>(t)).count());
}

// Accepts "YYYY-MM-DDTHH:MM" with optional ":SS" (seconds are truncated);
// a space may replace the 'T'.
inline Timestamp parse_timestamp(std::string_view s, std::size_t line) {
  if (s.size() < 16 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
    throw ParseError(line, "bad timestamp '" + std::string(s) + "'");
  if (s.size() != 16 && !(s.size() == 19 && s[16] == ':'))
    throw ParseError(line, "bad timestamp '" + std::string(s) + "'");
  const Date d = parse_date(s.substr(0, 10), line);
  const int h = csv::parse_int<int>(s.substr(11, 2), line, "hour");
  const int m = csv::parse_int<int>(s.substr(14, 2), line, "minute");
  if (h < 0 || h > 23 || m < 0 || m > 59)
    throw ParseError(line, "bad time of day '" + std::string(s) + "'");
  if (s.size() == 19) {
    const int sec = csv::parse_int<int>(s.substr(17, 2), line, "second");
    if (sec < 0 || sec > 59) throw ParseError(line, "bad seconds '" + std::string(s) + "'");
  }
  return std::chrono::sys_days{d} + std::chrono::minutes{h * 60 + m};
}

// Streams come back ordered by participant id, samples ordered by time.
inline std::vector<StepStream> parse_step_stream(const std::string& csv_text) {
  std::istringstream in(csv_text);
  const auto lines = csv::read_lines(in);
  if (lines.empty()) return {};
  if (csv::trim(lines[0]) != "participant_id,timestamp,steps")
    throw ParseError(1, "expected header 'participant_id,timestamp,steps'");
  std::map<std::string, std::vector<StepSample>> grouped;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (csv::trim(lines[ln]).empty()) continue;
    const std::size_t line_no = ln + 1;
    const auto f = csv::split(lines[ln]);
    if (f.size() != 3) throw ParseError(line_no, "expected 3 fields");
    if (f[0].empty()) throw ParseError(line_no, "empty participant_id");
    StepSample s{parse_timestamp(f[1], line_no),
                 csv::parse_int<std::int64_t>(f[2], line_no, "steps")};
    if (s.steps < 0)
      throw DomainError("line " + std::to_string(line_no) + ": negative step count " +
                        std::to_string(s.steps));
    grouped[std::string(f[0])].push_back(s);
  }
  std::vector<StepStream> out;
  for (auto& [id, samples] : grouped) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const StepSample& a, const StepSample& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (samples[i].time == samples[i - 1].time)
        throw DuplicateSampleError("participant '" + id + "' has duplicate samples at " +
                                   format_date(date_of(samples[i].time)) + " minute " +
                                   std::to_string(minute_of_day(samples[i].time)));
    out.push_back({id, std::move(samples)});
  }
  return out;
}

// `date,description` rows; descriptions must come from the vocabulary.
inline std::map<Date, WeatherCategory> parse_weather_csv(
    const std::string& text, const std::vector<WeatherCategory>& vocabulary) {
  std::map<std::string, int> code_of;
  for (const auto& w : vocabulary) code_of[w.description] = w.code;
  std::istringstream in(text);
  const auto lines = csv::read_lines(in);
  if (lines.empty() || csv::trim(lines[0]) != "date,description")
    throw ParseError(1, "expected header 'date,description'");
  std::map<Date, WeatherCategory> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (csv::trim(lines[ln]).empty()) continue;
    const std::size_t line_no = ln + 1;
    const auto comma = lines[ln].find(',');
    if (comma == std::string::npos) throw ParseError(line_no, "expected 2 fields");
    const Date d = parse_date(csv::trim(std::string_view(lines[ln]).substr(0, comma)), line_no);
    const std::string desc(csv::trim(std::string_view(lines[ln]).substr(comma + 1)));
    const auto it = code_of.find(desc);
    if (it == code_of.end())
      throw ParseError(line_no, "weather description '" + desc + "' not in vocabulary");
    if (!out.emplace(d, WeatherCategory{it->second, desc}).second)
      throw ParseError(line_no, "duplicate weather entry for " + format_date(d));
  }
  return out;
}

// Samples of `stream` falling on calendar date `day`.
inline std::span<const StepSample> samples_on(const StepStream& stream, const Date& day) {
  const Timestamp begin = std::chrono::sys_days{day};
  const Timestamp end = begin + std::chrono::days{1};
  const auto cmp = [](const StepSample& s, Timestamp t) { return s.time < t; };
  const auto lo = std::lower_bound(stream.samples.begin(), stream.samples.end(), begin, cmp);
  const auto hi = std::lower_bound(lo, stream.samples.end(), end, cmp);
  return {lo, hi};
}

// One flag per consecutive 40-minute interval of [start, end) on a single day.
// Minutes without samples contribute zero steps.
inline std::vector<bool> label_sedentary(std::span<const StepSample> day_samples,
                                         TimeOfDay window_start, TimeOfDay window_end) {
  const int span = window_end.minutes - window_start.minutes;
  if (span <= 0 || span % kSedentaryIntervalMinutes != 0)
    throw DomainError("sedentary window must be a positive multiple of 40 minutes");
  const int n = span / kSedentaryIntervalMinutes;
  std::vector<std::int64_t> totals(static_cast<std::size_t>(n), 0);
  for (const auto& s : day_samples) {
    const int m = minute_of_day(s.time);
    if (m < window_start.minutes || m >= window_end.minutes) continue;
    totals[static_cast<std::size_t>((m - window_start.minutes) / kSedentaryIntervalMinutes)] +=
        s.steps;
  }
  std::vector<bool> flags;
  flags.reserve(totals.size());
  for (auto t : totals) flags.push_back(t < kSedentaryStepThreshold);
  return flags;
}

inline std::vector<bool> label_sedentary(const StepStream& stream, const Date& day,
                                         TimeOfDay window_start, TimeOfDay window_end) {
  return label_sedentary(samples_on(stream, day), window_start, window_end);
}

inline int sedentary_count(std::span<const StepSample> day_samples) {
  const auto flags = label_sedentary(day_samples, kTargetStart, kTargetEnd);
  return static_cast<int>(std::count(flags.begin(), flags.end(), true));
}

enum class RejectionReason { NoUsableDays, TooFewDays };

inline const char* to_string(RejectionReason r) {
  return r == RejectionReason::NoUsableDays ? "no-usable-days" : "too-few-days";
}

struct DroppedDay {
  Date date;
  std::string reason;
};

struct Rejection {
  std::string participant_id;
  RejectionReason reason;
  std::size_t usable_days = 0;
};

struct DayRecordsBuild {
  std::variant<ParticipantSeries, Rejection> result;
  std::vector<DroppedDay> dropped;

  bool accepted() const { return std::holds_alternative<ParticipantSeries>(result); }
  const ParticipantSeries& series() const { return std::get<ParticipantSeries>(result); }
  const Rejection& rejection() const { return std::get<Rejection>(result); }
};

inline DayRecordsBuild build_day_records(const StepStream& stream,
                                         const std::map<Date, WeatherCategory>& weather_by_date) {
  DayRecordsBuild out;
  ParticipantSeries series{stream.participant_id, {}};
  std::vector<Date> days;
  for (const auto& s : stream.samples) {
    const Date d = date_of(s.time);
    if (days.empty() || days.back() != d) days.push_back(d);
  }
  const auto in_range = [](std::span<const StepSample> xs, TimeOfDay a, TimeOfDay b) {
    return std::any_of(xs.begin(), xs.end(), [&](const StepSample& s) {
      const int m = minute_of_day(s.time);
      return m >= a.minutes && m < b.minutes;
    });
  };
  for (const Date& day : days) {
    const auto today = samples_on(stream, day);
    if (!in_range(today, kContextStart, kTargetStart)) {
      out.dropped.push_back({day, "no-morning-data"});
      continue;
    }
    if (!in_range(today, kTargetStart, kTargetEnd)) {
      out.dropped.push_back({day, "no-target-window-data"});
      continue;
    }
    const auto yesterday = samples_on(stream, previous_day(day));
    if (yesterday.empty()) {
      out.dropped.push_back({day, "no-previous-day-data"});
      continue;
    }
    const auto w = weather_by_date.find(day);
    if (w == weather_by_date.end()) {
      out.dropped.push_back({day, "no-weather"});
      continue;
    }
    DayRecord r;
    r.date = day;
    for (const auto& s : today) {
      const int m = minute_of_day(s.time);
      if (m >= kContextStart.minutes && m < kTargetStart.minutes) r.morning_steps += s.steps;
    }
    for (const auto& s : yesterday) r.prev_total_steps += s.steps;
    r.prev_sedentary_count = sedentary_count(yesterday);
    r.weather_code = w->second.code;
    r.target = sedentary_count(today);
    series.records.push_back(r);
  }
  if (series.records.empty())
    out.result = Rejection{stream.participant_id, RejectionReason::NoUsableDays, 0};
  else if (series.records.size() < static_cast<std::size_t>(kMinUsableDays))
    out.result = Rejection{stream.participant_id, RejectionReason::TooFewDays,
                           series.records.size()};
  else
    out.result = std::move(series);
  return out;
}

struct IngestReport {
  std::vector<std::pair<std::string, DroppedDay>> dropped_days;
  std::vector<Rejection> rejected;
  std::size_t accepted = 0;
};

inline Cohort ingest_cohort(const std::vector<StepStream>& streams,
                            const std::map<Date, WeatherCategory>& weather_by_date,
                            std::vector<WeatherCategory> vocabulary, IngestReport& report) {
  Cohort cohort;
  cohort.weather_vocabulary = std::move(vocabulary);
  for (const auto& s : streams) {
    auto built = build_day_records(s, weather_by_date);
    for (auto& d : built.dropped) report.dropped_days.emplace_back(s.participant_id, d);
    if (built.accepted()) {
      cohort.participants.push_back(std::get<ParticipantSeries>(std::move(built.result)));
      ++report.accepted;
    } else {
      report.rejected.push_back(built.rejection());
    }
  }
  return cohort;
}

}  // namespace sedentary
