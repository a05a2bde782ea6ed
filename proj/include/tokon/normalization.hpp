#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tokon/time_series.hpp"

namespace tokon {

/// Position in the tokenizer's integer dictionary.
using TokenIndex = std::int64_t;

/// Pooled mean and sample standard deviation over a calibration set.
struct DomainStats {
  double mean = 0.0;
  double std_dev = 1.0;
  std::size_t sample_count = 0;

  DomainStats() = default;
  DomainStats(double mean, double std_dev, std::size_t sample_count);

  bool operator==(const DomainStats&) const = default;
};

/// Target location/scale in token-index units plus the dictionary range.
struct TargetParams {
  double target_mean = 499.5;
  double target_std = 1.0;
  TokenIndex index_min = 0;
  TokenIndex index_max = 999;

  TargetParams() = default;
  TargetParams(double target_mean, double target_std, TokenIndex index_min, TokenIndex index_max);

  /// Target mean fixed at the middle of the dictionary range.
  static TargetParams centered(double target_std, TokenIndex index_min = 0, TokenIndex index_max = 999);

  bool operator==(const TargetParams&) const = default;
};

struct NormalizationParams {
  DomainStats stats;
  TargetParams target;

  bool operator==(const NormalizationParams&) const = default;
};

struct NormalizedSeries {
  std::vector<TokenIndex> tokens;
};

DomainStats compute_domain_stats(std::span<const TimeSeries> series_set);

/// Rounding used by the normalizer: nearest integer, halves away from zero.
double round_half_away(double x) noexcept;

/// Unrounded affine image of `s` in token-index units.
double affine_image(double s, const DomainStats& stats, const TargetParams& target) noexcept;

TokenIndex normalize_value(double s, const DomainStats& stats, const TargetParams& target) noexcept;

NormalizedSeries normalize_series(const TimeSeries& series, const DomainStats& stats,
                                  const TargetParams& target);

double denormalize_value(double v, const DomainStats& stats, const TargetParams& target) noexcept;

std::vector<double> denormalize_values(std::span<const double> values, const DomainStats& stats,
                                       const TargetParams& target);

/// Worst-case |denormalize(normalize(s)) - s| for unclipped s.
double quantization_error_bound(const DomainStats& stats, const TargetParams& target) noexcept;

}  // namespace tokon
