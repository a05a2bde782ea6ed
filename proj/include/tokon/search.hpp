#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tokon/datasets.hpp"
#include "tokon/forecaster.hpp"
#include "tokon/normalization.hpp"
#include "tokon/prompting.hpp"

namespace tokon {

double golden_ratio_conjugate() noexcept;

enum class UpdateRule {
  /// Keep the side holding the better probe.
  Textbook,
  /// if C(upper) < C(lower) then hi = lower probe, else lo = upper probe.
  Verbatim,
};

struct BracketConfig {
  double epsilon = 1.0;
  double lo = 0.0;
  double hi = 999.0;
  int max_iterations = 50;
  UpdateRule rule = UpdateRule::Textbook;

  void validate() const;
};

struct SearchIteration {
  int iteration = 0;
  double lo = 0.0;
  double hi = 0.0;
  double probe_lower = 0.0;
  double probe_upper = 0.0;
  double cost_lower = 0.0;
  double cost_upper = 0.0;
};

struct SearchTrace {
  std::vector<SearchIteration> iterations;
  double final_lo = 0.0;
  double final_hi = 0.0;
  double final_sigma_t = 0.0;
  double best_probe = 0.0;
  double best_cost = 0.0;
  std::size_t cost_evaluations = 0;
  bool hit_max_iterations = false;
};

struct SearchResult {
  double sigma_t = 0.0;
  SearchTrace trace;
};

/// Golden-section minimization of `cost` over [lo, hi]; returns the midpoint of the
/// final bracket.
SearchResult golden_section_minimize(const BracketConfig& config,
                                     const std::function<double(double)>& cost);

enum class CostKind { SumSquaredError, SumAbsoluteError };

std::string to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& s);

struct SearchConfig {
  BracketConfig bracket;
  TokenIndex index_min = 0;
  TokenIndex index_max = 999;
  CostKind cost_kind = CostKind::SumSquaredError;
  std::vector<std::string> calibration_ids;
  PromptKind prompt_kind = PromptKind::Baseline;
  int max_retries = 2;
  std::size_t parallelism = 1;

  /// Defaults with the bracket spanning [index_min, index_max].
  static SearchConfig for_range(TokenIndex index_min, TokenIndex index_max);
  void validate() const;
  double target_mean() const noexcept { return 0.5 * (bracket.lo + bracket.hi); }
};

inline constexpr double kMinProbe = 1e-6;

double evaluate_probe_cost(double delta, std::span<const DatasetRecord> calibration,
                           const DomainStats& stats, Forecaster& forecaster,
                           const SearchConfig& config);

SearchResult golden_section_search(const SearchConfig& config, const Dataset& dataset,
                                   const DomainStats& stats, Forecaster& forecaster);

/// Builds the request a forecaster sees for `record` at the given normalization.
ForecastRequest make_request(const DatasetRecord& record, PromptKind kind,
                             const std::optional<NormalizationParams>& normalization);

/// Tab-separated, one row per iteration, with a header.
void write_trace(std::ostream& out, const SearchTrace& trace);

}  // namespace tokon
