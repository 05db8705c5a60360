#include <gtest/gtest.h>

#include "sedentary/ingest.hpp"

using namespace sedentary;
using namespace std::chrono;

namespace {

std::string fixture(const char* name) { return csv::read_file(std::string(FIXTURE_DIR) + "/" + name); }

Date ymd(int y, unsigned m, unsigned d) { return Date{year{y}, month{m}, day{d}}; }

StepSample sample(const Date& d, int h, int m, std::int64_t steps) {
  return {sys_days{d} + hours{h} + minutes{m}, steps};
}

}  // namespace

TEST(ParseStepStream, HeaderOnlyIsEmpty) {
  EXPECT_TRUE(parse_step_stream("participant_id,timestamp,steps\n").empty());
  EXPECT_TRUE(parse_step_stream("").empty());
}

TEST(ParseStepStream, SortsShuffledTimestamps) {
  const auto streams = parse_step_stream(
      "participant_id,timestamp,steps\n"
      "p1,2015-08-02T10:00,5\n"
      "p1,2015-08-01T23:59,7\n"
      "p1,2015-08-02 09:15:30,3\n");
  ASSERT_EQ(streams.size(), 1u);
  ASSERT_EQ(streams[0].samples.size(), 3u);
  EXPECT_EQ(streams[0].samples[0].steps, 7);
  EXPECT_EQ(streams[0].samples[1].steps, 3);
  EXPECT_EQ(streams[0].samples[2].steps, 5);
  EXPECT_EQ(minute_of_day(streams[0].samples[1].time), 9 * 60 + 15);
}

TEST(ParseStepStream, NegativeStepsIsDomainError) {
  try {
    parse_step_stream("participant_id,timestamp,steps\np1,2015-08-02T10:00,-5\n");
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_EQ(std::string(e.code()), "E_DOMAIN");
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseStepStream, DuplicateTimestampRejected) {
  EXPECT_THROW(parse_step_stream("participant_id,timestamp,steps\n"
                                 "p1,2015-08-02T10:00,5\np1,2015-08-02T10:00,6\n"),
               DuplicateSampleError);
}

TEST(ParseStepStream, MalformedRowsReportLine) {
  EXPECT_THROW(parse_step_stream("participant_id,timestamp,steps\np1,2015-08-02T10:00\n"),
               ParseError);
  EXPECT_THROW(parse_step_stream("participant_id,timestamp,steps\np1,2015-13-02T10:00,4\n"),
               ParseError);
  EXPECT_THROW(parse_step_stream("participant_id,timestamp,steps\np1,2015-08-02T25:00,4\n"),
               ParseError);
  EXPECT_THROW(parse_step_stream("id,time,steps\n"), ParseError);
  try {
    parse_step_stream("participant_id,timestamp,steps\np1,2015-08-02T10:00,1\np1,2015-08-02T10:01,x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LabelSedentary, ThresholdIsStrict) {
  const Date d = ymd(2015, 8, 1);
  StepStream s{"p", {sample(d, 15, 0, 139), sample(d, 15, 40, 100), sample(d, 16, 0, 40)}};
  const auto flags = label_sedentary(s, d, kTargetStart, kTargetEnd);
  ASSERT_EQ(flags.size(), 9u);
  EXPECT_TRUE(flags[0]);   // 139 steps
  EXPECT_FALSE(flags[1]);  // 100 + 40 = 140 steps
  EXPECT_TRUE(flags[2]);
}

TEST(LabelSedentary, EmptyDayIsNineSedentaryIntervals) {
  StepStream s{"p", {}};
  const auto flags = label_sedentary(s, ymd(2015, 8, 1), kTargetStart, kTargetEnd);
  ASSERT_EQ(flags.size(), 9u);
  EXPECT_EQ(std::count(flags.begin(), flags.end(), true), 9);
  EXPECT_EQ(sedentary_count(std::span<const StepSample>{}), 9);
}

TEST(LabelSedentary, SamplesOutsideWindowIgnored) {
  const Date d = ymd(2015, 8, 1);
  StepStream s{"p", {sample(d, 14, 59, 1000), sample(d, 21, 0, 1000), sample(d, 20, 59, 500)}};
  const auto flags = label_sedentary(s, d, kTargetStart, kTargetEnd);
  EXPECT_EQ(std::count(flags.begin(), flags.end(), true), 8);
  EXPECT_FALSE(flags[8]);
}

TEST(LabelSedentary, WindowMustTileIntoIntervals) {
  StepStream s{"p", {}};
  EXPECT_THROW(label_sedentary(s, ymd(2015, 8, 1), TimeOfDay::hm(15), TimeOfDay::hm(16)),
               DomainError);
  EXPECT_THROW(label_sedentary(s, ymd(2015, 8, 1), TimeOfDay::hm(16), TimeOfDay::hm(15)),
               DomainError);
}

namespace {

// `days` consecutive usable days starting 2015-08-02, with 2015-08-01 as the
// lead-in day that only supplies previous-day features.
StepStream usable_stream(int days) {
  StepStream s{"p", {}};
  for (int i = 0; i <= days; ++i) {
    const Date d = sys_days{ymd(2015, 8, 1)} + std::chrono::days{i};
    s.samples.push_back(sample(d, 10, 0, 100));
    s.samples.push_back(sample(d, 16, 0, 300));
  }
  return s;
}

std::map<Date, WeatherCategory> sunny(int days) {
  std::map<Date, WeatherCategory> w;
  for (int i = 0; i <= days + 1; ++i)
    w[sys_days{ymd(2015, 8, 1)} + std::chrono::days{i}] = {0, "sky is clear"};
  return w;
}

}  // namespace

TEST(BuildDayRecords, SixUsableDaysRejected) {
  const auto built = build_day_records(usable_stream(6), sunny(6));
  ASSERT_FALSE(built.accepted());
  EXPECT_EQ(built.rejection().reason, RejectionReason::TooFewDays);
  EXPECT_EQ(built.rejection().usable_days, 6u);
  const auto ok = build_day_records(usable_stream(7), sunny(7));
  ASSERT_TRUE(ok.accepted());
  EXPECT_EQ(ok.series().records.size(), 7u);
}

TEST(BuildDayRecords, AfternoonOnlyDayDroppedForMissingMorning) {
  auto s = usable_stream(7);
  const Date extra = ymd(2015, 8, 9);
  s.samples.push_back(sample(extra, 16, 0, 10));
  s.samples.push_back(sample(extra, 17, 0, 10));
  const auto built = build_day_records(s, sunny(8));
  ASSERT_TRUE(built.accepted());
  EXPECT_EQ(built.series().records.size(), 7u);
  bool found = false;
  for (const auto& d : built.dropped)
    if (d.date == extra) found = d.reason == "no-morning-data";
  EXPECT_TRUE(found);
}

TEST(BuildDayRecords, NoSamplesAtAllIsNoUsableDays) {
  const auto built = build_day_records(StepStream{"p", {}}, sunny(1));
  ASSERT_FALSE(built.accepted());
  EXPECT_EQ(built.rejection().reason, RejectionReason::NoUsableDays);
}

TEST(BuildDayRecords, MissingWeatherDropsDay) {
  auto w = sunny(8);
  w.erase(ymd(2015, 8, 3));
  const auto built = build_day_records(usable_stream(8), w);
  ASSERT_TRUE(built.accepted());
  EXPECT_EQ(built.series().records.size(), 7u);
}

TEST(IngestCohort, TinyFixtureMatchesHandComputation) {
  const auto vocab = default_weather_vocabulary();
  const auto streams = parse_step_stream(fixture("steps_tiny.csv"));
  const auto weather = parse_weather_csv(fixture("weather_tiny.csv"), vocab);
  IngestReport report;
  const Cohort c = ingest_cohort(streams, weather, vocab, report);
  ASSERT_EQ(c.participants.size(), 1u);
  EXPECT_EQ(report.accepted, 1u);
  ASSERT_EQ(report.rejected.size(), 1u);
  EXPECT_EQ(report.rejected[0].participant_id, "bob");
  EXPECT_EQ(report.rejected[0].reason, RejectionReason::TooFewDays);
  EXPECT_EQ(report.rejected[0].usable_days, 2u);

  const auto& alice = c.participants[0];
  ASSERT_EQ(alice.records.size(), 8u);  // Aug 2..9
  EXPECT_EQ(alice.records.front().date, ymd(2015, 8, 2));
  // Aug 3: morning 3000; Aug 2 total 2000 + 100 + 50; Aug 2 all sedentary;
  // one active interval on Aug 3; "mist" has code 5.
  const DayRecord& r = alice.records[1];
  EXPECT_EQ(r.morning_steps, 3000);
  EXPECT_EQ(r.prev_total_steps, 2150);
  EXPECT_EQ(r.prev_sedentary_count, 9);
  EXPECT_EQ(r.target, 8);
  EXPECT_EQ(r.weather_code, 5);
  EXPECT_EQ(alice.records.back().target, 2);

  std::vector<std::string> reasons;
  for (const auto& [id, d] : report.dropped_days) reasons.push_back(id + ":" + d.reason);
  EXPECT_NE(std::find(reasons.begin(), reasons.end(), "alice:no-previous-day-data"), reasons.end());
  EXPECT_NE(std::find(reasons.begin(), reasons.end(), "alice:no-morning-data"), reasons.end());
  EXPECT_NO_THROW(validate_cohort(c));
}

TEST(ParseWeather, UnknownDescriptionRejected) {
  const auto vocab = default_weather_vocabulary();
  EXPECT_THROW(parse_weather_csv("date,description\n2015-08-01,raining frogs\n", vocab), ParseError);
  EXPECT_THROW(parse_weather_csv("date,description\n2015-08-01,mist\n2015-08-01,fog\n", vocab),
               ParseError);
  const auto w = parse_weather_csv("date,description\n2015-08-01,proximity thunderstorm\n", vocab);
  EXPECT_EQ(w.at(ymd(2015, 8, 1)).code, 20);
}
