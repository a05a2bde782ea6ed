#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "support/test_util.hpp"
#include "tokon/datasets.hpp"
#include "tokon/error.hpp"

using namespace tokon;

namespace {

constexpr const char* kHeader =
    "Date;Time;Global_active_power;Global_reactive_power;Voltage;Global_intensity;Sub_metering_1;"
    "Sub_metering_2;Sub_metering_3\n";

std::string minute_row(int day, int hour, int minute, const std::string& intensity) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d/1/2007;%02d:%02d:00;1.0;0.1;240.0;%s;0;0;0\n", day, hour, minute,
                intensity.c_str());
  return buf;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no tokon::Error thrown";
  return Errc::InvalidArgument;
}

std::string m4_row(const std::string& id, std::size_t n, const std::string& date = "") {
  std::string row = "\"" + id + "\"";
  if (!date.empty()) row += ",\"" + date + "\"";
  for (std::size_t i = 0; i < n; ++i) row += ",\"" + std::to_string(i + 1) + "\"";
  return row + "\n";
}

}  // namespace

TEST(Ihepc, FixtureHourlyAverages) {
  std::ifstream in(test::data_path("ihepc_3day.txt"));
  const auto h = ihepc_hourly(in);
  ASSERT_EQ(h.values.size(), 72u);
  EXPECT_EQ(h.first_hour.iso_string(), "2007-01-01T00:00");
  for (std::size_t i = 0; i < 72; ++i) {
    if (i == 40) {
      EXPECT_TRUE(std::isnan(h.values[i]));
    } else {
      EXPECT_NEAR(h.values[i], 1.0 + double(i % 24) + 0.1, 1e-12) << i;
    }
  }
}

TEST(Ihepc, HourAverageOfOneToSixty) {
  std::string text = kHeader;
  for (int m = 0; m < 60; ++m) text += minute_row(1, 0, m, std::to_string(m + 1));
  std::istringstream in(text);
  const auto h = ihepc_hourly(in);
  ASSERT_EQ(h.values.size(), 1u);
  EXPECT_DOUBLE_EQ(h.values[0], 30.5);
}

TEST(Ihepc, RowOrderDoesNotChangeAverages) {
  std::vector<std::string> rows;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int hour = 0; hour < 3; ++hour)
    for (int m = 0; m < 60; ++m) {
      char v[32];
      std::snprintf(v, sizeof v, "%.3f", u(rng));
      rows.push_back(minute_row(1, hour, m, v));
    }
  auto average = [&](const std::vector<std::string>& r) {
    std::string text = kHeader;
    for (const auto& s : r) text += s;
    std::istringstream in(text);
    return ihepc_hourly(in).values;
  };
  const auto a = average(rows);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto b = average(rows);
  EXPECT_EQ(a, b);
}

TEST(Ihepc, FixtureWindowsSkipInvalidHour) {
  IhepcOptions opt;
  opt.context_len = 12;
  opt.horizon = 6;
  const auto ds = ingest_ihepc(test::data_path("ihepc_3day.txt"), opt);
  ASSERT_EQ(ds.records.size(), 3u);
  EXPECT_EQ(ds.records[0].id, "aihepc-0");
  EXPECT_EQ(ds.records[1].id, "aihepc-1");
  EXPECT_EQ(ds.records[2].id, "aihepc-3");
  EXPECT_EQ(ds.records[2].start.iso_string(), "2007-01-03T06:00");
  EXPECT_NO_THROW(ds.validate());
  for (std::size_t i = 1; i < ds.records.size(); ++i) {
    // Disjoint and ordered: each window starts after the previous one ends.
    EXPECT_LE(ds.records[i - 1].start.plus_hours(18), ds.records[i].start);
  }
  EXPECT_NEAR(ds.records[0].context[0], 1.1, 1e-12);
  EXPECT_NEAR(ds.records[0].target[0], 13.1, 1e-12);
}

TEST(Ihepc, TooShortForDefaultWindow) {
  const auto ds = ingest_ihepc(test::data_path("ihepc_3day.txt"));
  EXPECT_TRUE(ds.records.empty());
}

TEST(Ihepc, MaxSeriesCaps) {
  IhepcOptions opt;
  opt.context_len = 12;
  opt.horizon = 6;
  opt.max_series = 2;
  EXPECT_EQ(ingest_ihepc(test::data_path("ihepc_3day.txt"), opt).records.size(), 2u);
}

TEST(Ihepc, Errors) {
  std::istringstream no_col("Date;Time;Voltage\n1/1/2007;00:00:00;240\n");
  EXPECT_EQ(code_of([&] { ingest_ihepc(no_col); }), Errc::MissingColumn);
  std::istringstream bad(std::string(kHeader) + minute_row(1, 0, 0, "abc"));
  EXPECT_EQ(code_of([&] { ingest_ihepc(bad); }), Errc::UnparsableRow);
  std::istringstream bad_date(std::string(kHeader) + "40/1/2007;00:00:00;1;1;1;1;0;0;0\n");
  EXPECT_EQ(code_of([&] { ingest_ihepc(bad_date); }), Errc::UnparsableRow);
  EXPECT_EQ(code_of([&] { ingest_ihepc(std::filesystem::path("/nonexistent.txt")); }), Errc::Io);
}

TEST(M4, SlicesTailIntoContextAndTarget) {
  std::istringstream in(m4_row("Y1", 67) + m4_row("Y2", 80, "2001-03-01"));
  M4Options opt;
  opt.lengths = {49};
  opt.counts = {2};
  const auto ds = ingest_m4(in, opt);
  ASSERT_EQ(ds.records.size(), 2u);
  const auto& a = ds.records[0];
  EXPECT_EQ(a.context.size(), 49u);
  EXPECT_EQ(a.target.size(), 18u);
  EXPECT_EQ(a.context[0], 1.0);
  EXPECT_EQ(a.target[17], 67.0);
  EXPECT_EQ(a.date_source, DateSource::Synthesized);
  EXPECT_EQ(a.start.date_string(), "2000-01-01");
  const auto& b = ds.records[1];
  EXPECT_EQ(b.context[0], 14.0);  // 80 - 67 = 13 leading values dropped
  EXPECT_EQ(b.date_source, DateSource::Source);
  EXPECT_EQ(b.start.date_string(), "2002-04-01");
}

TEST(M4, SeriesUsedOnceAcrossLengths) {
  std::istringstream in(test::read_file(test::data_path("m4_small.csv")));
  M4Options opt;
  opt.lengths = {6, 4};
  opt.counts = {2, 2};
  opt.horizon = 2;
  const auto ds = ingest_m4(in, opt);
  std::vector<std::string> ids;
  for (const auto& r : ds.records) ids.push_back(r.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"M1", "M3", "M4", "M5"}));
  EXPECT_EQ(ds.records[2].start.date_string(), "2010-02-01");
  EXPECT_EQ(ds.records[2].context.size(), 4u);
}

TEST(M4, InsufficientSeries) {
  std::istringstream in(test::read_file(test::data_path("m4_small.csv")));
  M4Options opt;
  opt.lengths = {10};
  opt.counts = {2};
  opt.horizon = 2;
  EXPECT_EQ(code_of([&] { ingest_m4(in, opt); }), Errc::InsufficientSeries);
}

TEST(M4, UnparsableValue) {
  std::istringstream in("\"A\",\"1\",\"x\"\n");
  EXPECT_EQ(code_of([&] { ingest_m4(in); }), Errc::UnparsableRow);
}

TEST(Records, RoundTripWithManifest) {
  IhepcOptions opt;
  opt.context_len = 12;
  opt.horizon = 6;
  auto ds = ingest_ihepc(test::data_path("ihepc_3day.txt"), opt);
  ds.stats = calibration_stats(ds, 2);
  test::TempDir dir("records");
  const auto path = dir / "aihepc.jsonl";
  const auto manifest = write_records(ds, path);
  EXPECT_EQ(manifest.record_count, 3u);
  EXPECT_TRUE(std::filesystem::exists(manifest_path_for(path)));
  EXPECT_EQ(manifest_path_for(path).filename(), "aihepc.manifest.json");
  const auto back = read_records(path);
  EXPECT_EQ(back.name, ds.name);
  EXPECT_EQ(back.horizon, 6u);
  EXPECT_EQ(back.records, ds.records);
  ASSERT_TRUE(back.stats.has_value());
  EXPECT_EQ(back.stats->mean, ds.stats->mean);
  EXPECT_EQ(back.stats->std_dev, ds.stats->std_dev);
}

TEST(Records, SchemaViolationsNameTheLine) {
  test::TempDir dir("schema");
  const auto path = dir / "bad.jsonl";
  test::write_file(path,
                   "{\"id\":\"a\",\"granularity\":\"monthly\",\"start\":\"2000-01-01T00:00\",\"context\":[1,2],"
                   "\"target\":[3],\"date_source\":\"source\"}\n"
                   "{\"id\":\"b\",\"context\":[1]}\n");
  try {
    read_records(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaViolation);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  test::write_file(path, "");
  EXPECT_TRUE(read_records(path).records.empty());
}

TEST(Records, CalibrationStatsPoolFirstRecords) {
  IhepcOptions opt;
  opt.context_len = 12;
  opt.horizon = 6;
  const auto ds = ingest_ihepc(test::data_path("ihepc_3day.txt"), opt);
  const auto s = calibration_stats(ds, 1);
  EXPECT_EQ(s.sample_count, 12u);
  EXPECT_NEAR(s.mean, 6.6, 1e-12);
  EXPECT_EQ(calibration_stats(ds, 100).sample_count, 36u);
  Dataset empty;
  EXPECT_EQ(code_of([&] { calibration_stats(empty, 3); }), Errc::EmptyInput);
}
