#include "tokon/normalization.hpp"

#include <algorithm>
#include <cmath>

#include "tokon/error.hpp"
#include "tokon/kernels.hpp"

namespace tokon {

DomainStats::DomainStats(double mean_, double std_dev_, std::size_t sample_count_)
    : mean(mean_), std_dev(std_dev_), sample_count(sample_count_) {
  if (!std::isfinite(mean) || !std::isfinite(std_dev) || !(std_dev > 0.0)) {
    throw Error(Errc::InvalidArgument, "domain stats need a finite mean and a positive std_dev");
  }
}

TargetParams::TargetParams(double target_mean_, double target_std_, TokenIndex index_min_,
                           TokenIndex index_max_)
    : target_mean(target_mean_), target_std(target_std_), index_min(index_min_), index_max(index_max_) {
  if (index_min >= index_max) throw Error(Errc::InvalidArgument, "index_min must be below index_max");
  if (!(target_mean >= static_cast<double>(index_min) && target_mean <= static_cast<double>(index_max))) {
    throw Error(Errc::InvalidArgument, "target_mean must lie inside [index_min, index_max]");
  }
  if (!std::isfinite(target_std) || !(target_std > 0.0)) {
    throw Error(Errc::InvalidArgument, "target_std must be positive and finite");
  }
}

TargetParams TargetParams::centered(double target_std, TokenIndex index_min, TokenIndex index_max) {
  return {0.5 * static_cast<double>(index_min + index_max), target_std, index_min, index_max};
}

DomainStats compute_domain_stats(std::span<const TimeSeries> series_set) {
  if (series_set.empty()) throw Error(Errc::EmptyInput, "no series to compute stats from");

  std::vector<std::span<const double>> pool;
  pool.reserve(series_set.size());
  std::size_t count = 0;
  double lo = series_set.front()[0];
  double hi = lo;
  for (const auto& s : series_set) {
    pool.push_back(s.values());
    count += s.size();
    const auto [mn, mx] = std::minmax_element(s.values().begin(), s.values().end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  if (count < 2) throw Error(Errc::EmptyInput, "need at least two pooled values");
  if (lo == hi) throw Error(Errc::DegenerateVariance, "all pooled values are equal");

  const PooledMoments m = kernels::pooled_moments(pool);
  return {m.mean, std::sqrt(m.sum_sq_dev / static_cast<double>(m.count - 1)), m.count};
}

double round_half_away(double x) noexcept { return std::round(x); }

double affine_image(double s, const DomainStats& stats, const TargetParams& target) noexcept {
  return target.target_std * (s - stats.mean) / stats.std_dev + target.target_mean;
}

TokenIndex normalize_value(double s, const DomainStats& stats, const TargetParams& target) noexcept {
  // Clip in floating point first so huge inputs never overflow the integer cast.
  const double lo = static_cast<double>(target.index_min);
  const double hi = static_cast<double>(target.index_max);
  const double r = round_half_away(affine_image(s, stats, target));
  return static_cast<TokenIndex>(std::max(std::min(r, hi), lo));
}

NormalizedSeries normalize_series(const TimeSeries& series, const DomainStats& stats,
                                  const TargetParams& target) {
  NormalizedSeries out;
  out.tokens.resize(series.size());
  kernels::normalize_into(series.values(), out.tokens, stats, target);
  return out;
}

double denormalize_value(double v, const DomainStats& stats, const TargetParams& target) noexcept {
  return (v - target.target_mean) * stats.std_dev / target.target_std + stats.mean;
}

std::vector<double> denormalize_values(std::span<const double> values, const DomainStats& stats,
                                       const TargetParams& target) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return denormalize_value(v, stats, target); });
  return out;
}

double quantization_error_bound(const DomainStats& stats, const TargetParams& target) noexcept {
  return 0.5 * stats.std_dev / target.target_std;
}

}  // namespace tokon
