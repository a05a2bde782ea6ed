#pragma once

#include <span>
#include <string>
#include <string_view>

#include "tokon/normalization.hpp"
#include "tokon/time_series.hpp"

namespace tokon {

enum class PromptKind { Baseline, CoT, TSFC };

std::string to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& s);

enum class SpanUnit { Months, Hours };

struct PromptContext {
  Timestamp start;
  std::size_t span_count = 0;
  SpanUnit span_unit = SpanUnit::Months;
  std::size_t horizon = 0;
  std::string values_text;

  Timestamp end() const;
};

struct Prompt {
  std::string text;
  PromptKind kind = PromptKind::Baseline;
};

inline constexpr std::string_view kCotSuffix = "Let's think step by step.";
inline constexpr std::string_view kTsfcSuffix =
    "Analyze the time series step by step, focusing on identifying and leveraging trends and "
    "seasonal patterns. Execute each algebraic operation carefully, ensuring precision and "
    "accuracy at every stage. Pay close attention to trends and seasonal patterns, especially "
    "when determining the final answer";
inline constexpr std::string_view kAnswerDirective = "please answer the predicted values only";

std::string_view fixed_suffix(PromptKind kind);

std::string baseline_text(const PromptContext& ctx);
Prompt render_prompt(PromptKind kind, const PromptContext& ctx);

/// Integers joined by ", ".
std::string format_values(const NormalizedSeries& values);
/// One decimal place, joined by ", ".
std::string format_values(const TimeSeries& values);

}  // namespace tokon
