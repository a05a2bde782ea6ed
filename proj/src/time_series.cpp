#include "tokon/time_series.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "tokon/error.hpp"

namespace tokon {

TimeSeries::TimeSeries(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(Errc::EmptyInput, "time series must hold at least one value");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(Errc::InvalidArgument, "non-finite value at position " + std::to_string(i));
    }
  }
}

std::string to_string(Granularity g) {
  return g == Granularity::Hourly ? "hourly" : "monthly";
}

Granularity granularity_from_string(const std::string& s) {
  if (s == "hourly") return Granularity::Hourly;
  if (s == "monthly") return Granularity::Monthly;
  throw Error(Errc::InvalidArgument, "unknown granularity '" + s + "'");
}

namespace {

using namespace std::chrono;

sys_days to_days(const Timestamp& t) {
  return sys_days{year{t.year} / month{t.month} / day{t.day}};
}

}  // namespace

bool Timestamp::valid() const {
  return year_month_day{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}}.ok() &&
         hour < 24;
}

Timestamp Timestamp::plus_hours(std::int64_t hours) const {
  const std::int64_t total = static_cast<std::int64_t>(hour) + hours;
  std::int64_t days = total / 24;
  std::int64_t rem = total % 24;
  if (rem < 0) {
    rem += 24;
    --days;
  }
  const year_month_day ymd{to_days(*this) + std::chrono::days{days}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day()), static_cast<unsigned>(rem)};
}

Timestamp Timestamp::plus_months(std::int64_t months) const {
  const std::int64_t index = static_cast<std::int64_t>(year) * 12 + (month - 1) + months;
  std::int64_t y = index / 12;
  std::int64_t m = index % 12;
  if (m < 0) {
    m += 12;
    --y;
  }
  Timestamp out{static_cast<int>(y), static_cast<unsigned>(m + 1), day, hour};
  // Clamp day-of-month for short months (e.g. Jan 31 + 1 month).
  const year_month_day_last last{std::chrono::year{out.year}, month_day_last{std::chrono::month{out.month}}};
  out.day = std::min(out.day, static_cast<unsigned>(last.day()));
  return out;
}

std::string Timestamp::date_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

std::string Timestamp::iso_string() const {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:00", year, month, day, hour);
  return buf;
}

Timestamp Timestamp::parse(const std::string& text) {
  Timestamp t;
  unsigned minute = 0;
  char sep = 0;
  int consumed = 0;
  const int n = std::sscanf(text.c_str(), "%d-%u-%u%c%u:%u%n", &t.year, &t.month, &t.day, &sep,
                            &t.hour, &minute, &consumed);
  bool ok = false;
  if (n == 3) {
    int date_only = 0;
    std::sscanf(text.c_str(), "%*d-%*u-%*u%n", &date_only);
    ok = static_cast<std::size_t>(date_only) == text.size();
    t.hour = 0;
  } else if (n == 6) {
    ok = (sep == 'T' || sep == ' ') && static_cast<std::size_t>(consumed) == text.size() &&
         minute < 60;
  }
  if (!ok || !t.valid()) throw Error(Errc::InvalidArgument, "unparsable timestamp '" + text + "'");
  return t;
}

}  // namespace tokon
