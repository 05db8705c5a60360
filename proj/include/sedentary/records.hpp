#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sedentary/csv.hpp"
#include "sedentary/error.hpp"

namespace sedentary {

using Date = std::chrono::year_month_day;

inline constexpr int kWeatherCategories = 21;
inline constexpr int kContinuousFeatures = 3;
inline constexpr int kFeatureDim = kContinuousFeatures + kWeatherCategories;
inline constexpr int kMaxSedentaryCount = 9;
inline constexpr int kMinUsableDays = 7;

inline Date parse_date(std::string_view s, std::size_t line = 0) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    throw ParseError(line, "bad date '" + std::string(s) + "'");
  const int y = csv::parse_int<int>(s.substr(0, 4), line, "year");
  const unsigned m = csv::parse_int<unsigned>(s.substr(5, 2), line, "month");
  const unsigned d = csv::parse_int<unsigned>(s.substr(8, 2), line, "day");
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw ParseError(line, "invalid calendar date '" + std::string(s) + "'");
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

inline Date previous_day(const Date& d) {
  return Date{std::chrono::sys_days{d} - std::chrono::days{1}};
}

struct WeatherCategory {
  int code = 0;
  std::string description;

  friend bool operator==(const WeatherCategory&, const WeatherCategory&) = default;
};

// Hourly weather descriptions as they appear in the public historical
// weather archive the study drew from.
inline std::vector<WeatherCategory> default_weather_vocabulary() {
  static const std::array<const char*, kWeatherCategories> names = {
      "sky is clear",       "few clouds",         "scattered clouds",
      "broken clouds",      "overcast clouds",    "mist",
      "fog",                "haze",               "smoke",
      "light rain",         "moderate rain",      "heavy intensity rain",
      "very heavy rain",    "light intensity drizzle", "drizzle",
      "light snow",         "snow",               "heavy snow",
      "thunderstorm",       "thunderstorm with light rain", "proximity thunderstorm"};
  std::vector<WeatherCategory> vocab;
  for (int i = 0; i < kWeatherCategories; ++i) vocab.push_back({i, names[i]});
  return vocab;
}

inline void validate_vocabulary(const std::vector<WeatherCategory>& vocab) {
  if (vocab.size() != static_cast<std::size_t>(kWeatherCategories))
    throw DomainError("weather vocabulary must contain exactly 21 descriptions, got " +
                      std::to_string(vocab.size()));
  std::set<std::string> seen;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i].code != static_cast<int>(i))
      throw DomainError("weather vocabulary codes must be 0..20 in order");
    if (!seen.insert(vocab[i].description).second)
      throw DomainError("duplicate weather description '" + vocab[i].description + "'");
  }
}

// One description per line; the (0-based) line number is the code.
inline std::vector<WeatherCategory> parse_vocabulary(const std::string& text) {
  std::istringstream in(text);
  std::vector<WeatherCategory> vocab;
  for (auto& line : csv::read_lines(in)) {
    const auto desc = csv::trim(line);
    if (desc.empty()) continue;
    vocab.push_back({static_cast<int>(vocab.size()), std::string(desc)});
  }
  validate_vocabulary(vocab);
  return vocab;
}

struct DayRecord {
  Date date{};
  std::int64_t morning_steps = 0;
  std::int64_t prev_total_steps = 0;
  int prev_sedentary_count = 0;
  int weather_code = 0;
  int target = 0;

  friend bool operator==(const DayRecord&, const DayRecord&) = default;
};

struct ParticipantSeries {
  std::string participant_id;
  std::vector<DayRecord> records;

  std::size_t size() const { return records.size(); }
  friend bool operator==(const ParticipantSeries&, const ParticipantSeries&) = default;
};

struct Cohort {
  std::vector<ParticipantSeries> participants;
  std::vector<WeatherCategory> weather_vocabulary = default_weather_vocabulary();

  std::size_t size() const { return participants.size(); }
  friend bool operator==(const Cohort&, const Cohort&) = default;
};

inline void validate_record(const DayRecord& r) {
  if (r.target < 0 || r.target > kMaxSedentaryCount)
    throw DomainError("target outside [0, 9]: " + std::to_string(r.target));
  if (r.prev_sedentary_count < 0 || r.prev_sedentary_count > kMaxSedentaryCount)
    throw DomainError("prev_sedentary_count outside [0, 9]: " +
                      std::to_string(r.prev_sedentary_count));
  if (r.weather_code < 0 || r.weather_code >= kWeatherCategories)
    throw DomainError("weather code outside vocabulary: " + std::to_string(r.weather_code));
  if (r.morning_steps < 0 || r.prev_total_steps < 0)
    throw DomainError("negative step total in day record");
}

inline void validate_series(const ParticipantSeries& s) {
  if (s.records.size() < static_cast<std::size_t>(kMinUsableDays))
    throw DomainError("participant '" + s.participant_id + "' has fewer than 7 records");
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    validate_record(s.records[i]);
    if (i > 0 && !(s.records[i - 1].date < s.records[i].date))
      throw DomainError("participant '" + s.participant_id + "' dates not strictly increasing");
  }
}

inline void validate_cohort(const Cohort& c) {
  if (c.participants.empty()) throw DomainError("cohort is empty");
  validate_vocabulary(c.weather_vocabulary);
  std::set<std::string> ids;
  for (const auto& p : c.participants) {
    if (!ids.insert(p.participant_id).second)
      throw DomainError("duplicate participant id '" + p.participant_id + "'");
    validate_series(p);
  }
}

inline constexpr const char* kDayRecordsHeader =
    "participant_id,date,morning_steps,prev_total_steps,prev_sedentary_count,weather_code,target";

inline std::string write_day_records_csv(const Cohort& cohort) {
  std::ostringstream out;
  out << kDayRecordsHeader << '\n';
  for (const auto& p : cohort.participants)
    for (const auto& r : p.records)
      out << p.participant_id << ',' << format_date(r.date) << ',' << r.morning_steps << ','
          << r.prev_total_steps << ',' << r.prev_sedentary_count << ',' << r.weather_code << ','
          << r.target << '\n';
  return out.str();
}

// Participants keep their first-appearance order; records within a participant
// are sorted by date.
inline Cohort parse_day_records_csv(const std::string& text,
                                    std::vector<WeatherCategory> vocabulary =
                                        default_weather_vocabulary()) {
  std::istringstream in(text);
  const auto lines = csv::read_lines(in);
  if (lines.empty() || csv::trim(lines[0]) != kDayRecordsHeader)
    throw ParseError(1, std::string("expected header '") + kDayRecordsHeader + "'");
  Cohort cohort;
  cohort.weather_vocabulary = std::move(vocabulary);
  std::map<std::string, std::size_t> index;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (csv::trim(lines[ln]).empty()) continue;
    const auto f = csv::split(lines[ln]);
    const std::size_t line_no = ln + 1;
    if (f.size() != 7) throw ParseError(line_no, "expected 7 fields");
    DayRecord r;
    r.date = parse_date(f[1], line_no);
    r.morning_steps = csv::parse_int<std::int64_t>(f[2], line_no, "morning_steps");
    r.prev_total_steps = csv::parse_int<std::int64_t>(f[3], line_no, "prev_total_steps");
    r.prev_sedentary_count = csv::parse_int<int>(f[4], line_no, "prev_sedentary_count");
    r.weather_code = csv::parse_int<int>(f[5], line_no, "weather_code");
    r.target = csv::parse_int<int>(f[6], line_no, "target");
    try {
      validate_record(r);
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    const std::string id(f[0]);
    if (id.empty()) throw ParseError(line_no, "empty participant_id");
    auto [it, inserted] = index.emplace(id, cohort.participants.size());
    if (inserted) cohort.participants.push_back({id, {}});
    cohort.participants[it->second].records.push_back(r);
  }
  for (auto& p : cohort.participants) {
    std::sort(p.records.begin(), p.records.end(),
              [](const DayRecord& a, const DayRecord& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < p.records.size(); ++i)
      if (p.records[i].date == p.records[i - 1].date)
        throw DuplicateSampleError("participant '" + p.participant_id + "' has two records for " +
                                   format_date(p.records[i].date));
  }
  return cohort;
}

// Per-feature centering and scaling for the three continuous features.
struct FeatureScaler {
  std::array<double, kContinuousFeatures> mean{0.0, 0.0, 0.0};
  std::array<double, kContinuousFeatures> scale{1.0, 1.0, 1.0};

  static std::array<double, kContinuousFeatures> raw(const DayRecord& r) {
    return {static_cast<double>(r.morning_steps), static_cast<double>(r.prev_total_steps),
            static_cast<double>(r.prev_sedentary_count)};
  }

  // Population standard deviation; constant features keep scale 1.
  template <typename Records>
  static FeatureScaler fit(const Records& records) {
    FeatureScaler s;
    std::size_t n = 0;
    std::array<double, kContinuousFeatures> sum{}, sq{};
    for (const DayRecord& r : records) {
      const auto x = raw(r);
      for (int k = 0; k < kContinuousFeatures; ++k) sum[k] += x[k];
      ++n;
    }
    if (n == 0) return s;
    for (int k = 0; k < kContinuousFeatures; ++k) s.mean[k] = sum[k] / static_cast<double>(n);
    for (const DayRecord& r : records) {
      const auto x = raw(r);
      for (int k = 0; k < kContinuousFeatures; ++k) sq[k] += (x[k] - s.mean[k]) * (x[k] - s.mean[k]);
    }
    for (int k = 0; k < kContinuousFeatures; ++k) {
      const double sd = std::sqrt(sq[k] / static_cast<double>(n));
      s.scale[k] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }
};

// [standardized morning, standardized prev total, standardized prev sedentary] ++ one-hot(21)
inline Eigen::VectorXd encode_features(const DayRecord& record,
                                       const std::vector<WeatherCategory>& vocabulary,
                                       const FeatureScaler& scaler) {
  if (record.weather_code < 0 || record.weather_code >= static_cast<int>(vocabulary.size()))
    throw DomainError("weather code " + std::to_string(record.weather_code) +
                      " outside vocabulary");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kContinuousFeatures + static_cast<Eigen::Index>(vocabulary.size()));
  const auto r = FeatureScaler::raw(record);
  for (int k = 0; k < kContinuousFeatures; ++k) x[k] = (r[k] - scaler.mean[k]) / scaler.scale[k];
  x[kContinuousFeatures + record.weather_code] = 1.0;
  return x;
}

// Rows are encoded records, in order.
template <typename Records>
Eigen::MatrixXd encode_matrix(const Records& records, const std::vector<WeatherCategory>& vocabulary,
                              const FeatureScaler& scaler) {
  std::vector<const DayRecord*> rows;
  for (const DayRecord& r : records) rows.push_back(&r);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                    kContinuousFeatures + static_cast<Eigen::Index>(vocabulary.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = encode_features(*rows[i], vocabulary, scaler).transpose();
  return X;
}

template <typename Records>
Eigen::VectorXd target_vector(const Records& records) {
  std::vector<double> y;
  for (const DayRecord& r : records) y.push_back(r.target);
  return Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
}

}  // namespace sedentary
