#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tokon {

/// Ordered, non-empty list of finite values in domain units.
class TimeSeries {
public:
  explicit TimeSeries(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double back() const noexcept { return values_.back(); }

  bool operator==(const TimeSeries&) const = default;

private:
  std::vector<double> values_;
};

enum class Granularity { Hourly, Monthly };

std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);

/// Calendar timestamp with hour resolution. Monthly data leaves hour at 0.
struct Timestamp {
  int year = 2000;
  unsigned month = 1;
  unsigned day = 1;
  unsigned hour = 0;

  auto operator<=>(const Timestamp&) const = default;

  Timestamp plus_hours(std::int64_t hours) const;
  Timestamp plus_months(std::int64_t months) const;

  /// "YYYY-MM-DD"
  std::string date_string() const;
  /// "YYYY-MM-DDTHH:00"
  std::string iso_string() const;
  /// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM" and "YYYY-MM-DD HH:MM".
  static Timestamp parse(const std::string& text);
  bool valid() const;
};

}  // namespace tokon
