#include "tokon/prompting.hpp"

#include <charconv>
#include <cstdio>

#include "tokon/error.hpp"

namespace tokon {

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Baseline: return "baseline";
    case PromptKind::CoT: return "cot";
    case PromptKind::TSFC: return "tsfc";
  }
  return "baseline";
}

PromptKind prompt_kind_from_string(const std::string& s) {
  if (s == "baseline") return PromptKind::Baseline;
  if (s == "cot") return PromptKind::CoT;
  if (s == "tsfc") return PromptKind::TSFC;
  throw Error(Errc::InvalidArgument, "unknown prompt kind '" + s + "' (baseline|cot|tsfc)");
}

Timestamp PromptContext::end() const {
  const auto n = static_cast<std::int64_t>(span_count);
  return span_unit == SpanUnit::Months ? start.plus_months(n) : start.plus_hours(n);
}

std::string_view fixed_suffix(PromptKind kind) {
  switch (kind) {
    case PromptKind::Baseline: return {};
    case PromptKind::CoT: return kCotSuffix;
    case PromptKind::TSFC: return kTsfcSuffix;
  }
  return {};
}

std::string baseline_text(const PromptContext& ctx) {
  if (ctx.horizon == 0) throw Error(Errc::InvalidArgument, "horizon must be at least 1");
  if (ctx.span_count == 0) throw Error(Errc::InvalidArgument, "span_count must be at least 1");
  const bool hourly = ctx.span_unit == SpanUnit::Hours;
  auto stamp = [&](const Timestamp& t) {
    if (!hourly) return t.date_string();
    char buf[8];
    std::snprintf(buf, sizeof buf, " %02u:00", t.hour);
    return t.date_string() + buf;
  };
  std::string text = "Given the recorded measurements from ";
  text += stamp(ctx.start);
  text += " to ";
  text += stamp(ctx.end());
  text += " spanning ";
  text += std::to_string(ctx.span_count);
  text += hourly ? " hours" : " months";
  text += ", with the values: ";
  text += ctx.values_text;
  text += ", predict the next ";
  text += std::to_string(ctx.horizon);
  text += " measurements.";
  return text;
}

Prompt render_prompt(PromptKind kind, const PromptContext& ctx) {
  Prompt p{baseline_text(ctx), kind};
  if (const auto suffix = fixed_suffix(kind); !suffix.empty()) {
    p.text += ' ';
    p.text += suffix;
  }
  p.text += ' ';
  p.text += kAnswerDirective;
  return p;
}

std::string format_values(const NormalizedSeries& values) {
  if (values.tokens.empty()) throw Error(Errc::EmptyInput, "nothing to format");
  std::string out;
  for (std::size_t i = 0; i < values.tokens.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(values.tokens[i]);
  }
  return out;
}

std::string format_values(const TimeSeries& values) {
  std::string out;
  char buf[400];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    const auto res = std::to_chars(buf, buf + sizeof buf, values[i], std::chars_format::fixed, 1);
    out.append(buf, res.ptr);
  }
  return out;
}

}  // namespace tokon
