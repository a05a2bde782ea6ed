#include "tokon/search.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "tokon/error.hpp"

namespace tokon {

double golden_ratio_conjugate() noexcept {
  static const double rho = (std::sqrt(5.0) - 1.0) / 2.0;
  return rho;
}

void BracketConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be positive");
  if (!(lo < hi)) throw Error(Errc::InvalidArgument, "initial_lo must be below initial_hi");
  if (max_iterations <= 0) throw Error(Errc::InvalidArgument, "max_iterations must be positive");
}

SearchResult golden_section_minimize(const BracketConfig& config,
                                     const std::function<double(double)>& cost) {
  config.validate();
  const double rho = golden_ratio_conjugate();
  SearchTrace trace;
  trace.best_cost = std::numeric_limits<double>::infinity();
  double lo = config.lo;
  double hi = config.hi;
  trace.best_probe = 0.5 * (lo + hi);

  int iteration = 0;
  while (hi - lo > config.epsilon) {
    if (iteration == config.max_iterations) {
      trace.hit_max_iterations = true;
      break;
    }
    const double width = hi - lo;
    SearchIteration it;
    it.iteration = iteration;
    it.lo = lo;
    it.hi = hi;
    it.probe_upper = lo + width * rho;
    it.probe_lower = hi - width * rho;
    it.cost_upper = cost(it.probe_upper);
    it.cost_lower = cost(it.probe_lower);
    trace.cost_evaluations += 2;

    if (it.cost_upper < trace.best_cost) {
      trace.best_cost = it.cost_upper;
      trace.best_probe = it.probe_upper;
    }
    if (it.cost_lower < trace.best_cost) {
      trace.best_cost = it.cost_lower;
      trace.best_probe = it.probe_lower;
    }

    if (config.rule == UpdateRule::Textbook) {
      if (it.cost_lower < it.cost_upper) {
        hi = it.probe_upper;
      } else {
        lo = it.probe_lower;
      }
    } else {
      if (it.cost_upper < it.cost_lower) {
        hi = it.probe_lower;
      } else {
        lo = it.probe_upper;
      }
    }
    trace.iterations.push_back(it);
    ++iteration;
  }

  trace.final_lo = lo;
  trace.final_hi = hi;
  trace.final_sigma_t = 0.5 * (lo + hi);
  return {trace.final_sigma_t, std::move(trace)};
}

std::string to_string(CostKind kind) {
  return kind == CostKind::SumSquaredError ? "sse" : "sae";
}

CostKind cost_kind_from_string(const std::string& s) {
  if (s == "sse") return CostKind::SumSquaredError;
  if (s == "sae") return CostKind::SumAbsoluteError;
  throw Error(Errc::InvalidArgument, "unknown cost '" + s + "' (sse|sae)");
}

SearchConfig SearchConfig::for_range(TokenIndex index_min, TokenIndex index_max) {
  SearchConfig c;
  c.index_min = index_min;
  c.index_max = index_max;
  c.bracket.lo = static_cast<double>(index_min);
  c.bracket.hi = static_cast<double>(index_max);
  return c;
}

void SearchConfig::validate() const {
  bracket.validate();
  if (calibration_ids.empty()) throw Error(Errc::InvalidArgument, "calibration set is empty");
  if (index_min >= index_max) throw Error(Errc::InvalidArgument, "index_min must be below index_max");
  const double mid = target_mean();
  if (mid < static_cast<double>(index_min) || mid > static_cast<double>(index_max)) {
    throw Error(Errc::InvalidArgument, "bracket midpoint falls outside the index range");
  }
  if (parallelism == 0) throw Error(Errc::InvalidArgument, "parallelism must be positive");
}

ForecastRequest make_request(const DatasetRecord& record, PromptKind kind,
                             const std::optional<NormalizationParams>& normalization) {
  ForecastRequest req;
  req.series_id = record.id;
  req.horizon = record.target.size();
  req.reference_target.assign(record.target.values().begin(), record.target.values().end());
  req.normalization = normalization;

  PromptContext ctx;
  ctx.start = record.start;
  ctx.span_count = record.context.size();
  ctx.span_unit = record.granularity == Granularity::Hourly ? SpanUnit::Hours : SpanUnit::Months;
  ctx.horizon = req.horizon;
  if (normalization) {
    const auto tokens = normalize_series(record.context, normalization->stats, normalization->target);
    ctx.values_text = format_values(tokens);
    req.context.assign(tokens.tokens.begin(), tokens.tokens.end());
  } else {
    ctx.values_text = format_values(record.context);
    req.context.assign(record.context.values().begin(), record.context.values().end());
  }
  req.prompt = render_prompt(kind, ctx);
  return req;
}

namespace {

double series_cost(std::span<const double> prediction, std::span<const double> target, CostKind kind) {
  double sum = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double e = prediction[k] - target[k];
    sum += kind == CostKind::SumSquaredError ? e * e : std::abs(e);
  }
  return sum;
}

}  // namespace

double evaluate_probe_cost(double delta, std::span<const DatasetRecord> calibration,
                           const DomainStats& stats, Forecaster& forecaster,
                           const SearchConfig& config) {
  if (!(delta >= 0.0)) throw Error(Errc::InvalidArgument, "probe must be non-negative");
  if (calibration.empty()) throw Error(Errc::InvalidArgument, "calibration set is empty");
  const NormalizationParams params{
      stats, TargetParams(config.target_mean(), std::max(delta, kMinProbe), config.index_min, config.index_max)};

  std::vector<ForecastRequest> requests;
  requests.reserve(calibration.size());
  for (const auto& r : calibration) requests.push_back(make_request(r, config.prompt_kind, params));
  const auto responses = forecast_batch(requests, forecaster, config.max_retries, config.parallelism);

  std::vector<double> costs(calibration.size());
  std::size_t failures = 0;
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    const auto target = calibration[i].target.values();
    if (responses[i].failed) {
      ++failures;
      const std::vector<double> naive(target.size(), calibration[i].context.back());
      costs[i] = series_cost(naive, target, config.cost_kind);
      continue;
    }
    const auto prediction = denormalize_values(responses[i].parsed_values, params.stats, params.target);
    costs[i] = series_cost(prediction, target, config.cost_kind);
  }
  if (failures == calibration.size()) {
    throw Error(Errc::AllForecastsFailed, "every calibration forecast failed at delta " + std::to_string(delta));
  }
  double total = 0.0;
  for (double c : costs) total += c;
  return total;
}

SearchResult golden_section_search(const SearchConfig& config, const Dataset& dataset,
                                   const DomainStats& stats, Forecaster& forecaster) {
  config.validate();
  std::vector<DatasetRecord> calibration;
  calibration.reserve(config.calibration_ids.size());
  for (const auto& id : config.calibration_ids) {
    const auto* r = dataset.find(id);
    if (r == nullptr) throw Error(Errc::InvalidArgument, "calibration id '" + id + "' not in dataset");
    calibration.push_back(*r);
  }
  return golden_section_minimize(config.bracket, [&](double delta) {
    return evaluate_probe_cost(delta, calibration, stats, forecaster, config);
  });
}

void write_trace(std::ostream& out, const SearchTrace& trace) {
  out << "iteration\tlo\thi\tprobe_lower\tprobe_upper\tcost_lower\tcost_upper\n";
  char buf[256];
  for (const auto& it : trace.iterations) {
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n", it.iteration, it.lo, it.hi,
                  it.probe_lower, it.probe_upper, it.cost_lower, it.cost_upper);
    out << buf;
  }
}

}  // namespace tokon
