#include "tokon/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <ostream>

#include "tokon/error.hpp"
#include "tokon/kernels.hpp"
#include "tokon/search.hpp"

namespace tokon {

using nlohmann::json;

namespace {

void check_pair(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                          std::to_string(targets.size()) + " targets");
  }
  if (predictions.empty()) throw Error(Errc::EmptyInput, "no values to score");
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json backend_json(const BackendConfig& b) {
  json j = {{"kind", to_string(b.kind)},
            {"max_retries", b.max_retries},
            {"parallelism", b.parallelism}};
  switch (b.kind) {
    case BackendKind::RemoteLLM:
      j["api_base_url"] = b.api_base_url;
      j["model_name"] = b.model_name;
      j["temperature"] = b.temperature;
      j["requests_per_minute"] = b.requests_per_minute;
      break;
    case BackendKind::SeasonalNaive: j["seasonal_period"] = b.seasonal_period; break;
    case BackendKind::Replay: j["replay_path"] = b.replay_path.string(); break;
    default: break;
  }
  return j;
}

}  // namespace

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  check_pair(predictions, targets);
  double sq = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(targets.size()));
}

double mae(std::span<const double> predictions, std::span<const double> targets) {
  check_pair(predictions, targets);
  double ab = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) ab += std::abs(predictions[i] - targets[i]);
  return ab / static_cast<double>(targets.size());
}

MetricReport per_step_metrics(std::span<const SeriesResult> results, std::size_t horizon,
                              std::optional<std::size_t> eval_steps) {
  if (horizon == 0) throw Error(Errc::InvalidArgument, "horizon must be positive");
  const std::size_t steps = eval_steps.value_or(horizon);
  if (steps == 0 || steps > horizon) {
    throw Error(Errc::InvalidArgument, "evaluation steps must lie in [1, " + std::to_string(horizon) + "]");
  }

  MetricReport report;
  report.n_series = results.size();
  std::vector<double> predictions;
  std::vector<double> targets;
  std::size_t rows = 0;
  for (const auto& r : results) {
    if (r.failed) {
      ++report.n_failed;
      continue;
    }
    if (r.prediction.size() != horizon || r.target.size() != horizon) {
      throw Error(Errc::LengthMismatch, "series " + r.id + " does not have " + std::to_string(horizon) + " steps");
    }
    predictions.insert(predictions.end(), r.prediction.begin(), r.prediction.begin() + static_cast<std::ptrdiff_t>(steps));
    targets.insert(targets.end(), r.target.begin(), r.target.begin() + static_cast<std::ptrdiff_t>(steps));
    ++rows;
  }
  if (rows == 0) throw Error(Errc::NoSuccessfulSeries, "every series failed");

  const StepErrorSums sums = kernels::step_error_sums(predictions, targets, rows, steps);
  const double n = static_cast<double>(rows);
  report.rmse_per_step.resize(steps);
  report.mae_per_step.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    report.rmse_per_step[k] = std::sqrt(sums.squared[k] / n);
    report.mae_per_step[k] = sums.absolute[k] / n;
    report.rmse_avg += report.rmse_per_step[k];
    report.mae_avg += report.mae_per_step[k];
  }
  report.rmse_avg /= static_cast<double>(steps);
  report.mae_avg /= static_cast<double>(steps);
  return report;
}

double improvement_percent(double baseline_value, double improved_value) {
  if (!(baseline_value > 0.0)) throw Error(Errc::NonPositiveBaseline, "baseline must be positive");
  return 100.0 * (baseline_value - improved_value) / baseline_value;
}

std::vector<std::vector<double>> normalized_per_step_table(const std::map<PromptKind, MetricReport>& reports) {
  if (reports.empty()) throw Error(Errc::EmptyInput, "no reports to normalize");
  const std::size_t steps = reports.begin()->second.rmse_per_step.size();
  double minimum = std::numeric_limits<double>::infinity();
  for (const auto& [kind, r] : reports) {
    if (r.rmse_per_step.size() != steps || steps == 0) {
      throw Error(Errc::LengthMismatch, "reports do not share one horizon");
    }
    for (double v : r.rmse_per_step) minimum = std::min(minimum, v);
  }
  if (!(minimum > 0.0)) throw Error(Errc::InvalidArgument, "minimum per-step RMSE is zero");

  std::vector<std::vector<double>> table;
  table.reserve(reports.size());
  for (const auto& [kind, r] : reports) {
    std::vector<double> row(steps);
    for (std::size_t k = 0; k < steps; ++k) row[k] = r.rmse_per_step[k] / minimum;
    table.push_back(std::move(row));
  }
  return table;
}

void ExperimentConfig::validate() const {
  if (use_tokon && !normalization) throw Error(Errc::InvalidArgument, "TOKON runs need normalization params");
  if (horizon_eval && *horizon_eval == 0) throw Error(Errc::InvalidArgument, "horizon_eval must be positive");
  backend.validate();
}

json to_json(const MetricReport& report) {
  return {{"rmse_per_step", report.rmse_per_step}, {"mae_per_step", report.mae_per_step},
          {"rmse_avg", report.rmse_avg},           {"mae_avg", report.mae_avg},
          {"n_series", report.n_series},           {"n_failed", report.n_failed}};
}

json to_json(const NormalizationParams& p) {
  return {{"mean", p.stats.mean},
          {"std_dev", p.stats.std_dev},
          {"sample_count", p.stats.sample_count},
          {"target_mean", p.target.target_mean},
          {"target_std", p.target.target_std},
          {"index_min", p.target.index_min},
          {"index_max", p.target.index_max}};
}

NormalizationParams normalization_from_json(const json& j) {
  try {
    return {DomainStats(j.at("mean").get<double>(), j.at("std_dev").get<double>(),
                        j.value("sample_count", std::size_t{0})),
            TargetParams(j.at("target_mean").get<double>(), j.at("target_std").get<double>(),
                         j.value("index_min", TokenIndex{0}), j.value("index_max", TokenIndex{999}))};
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("normalization params: ") + e.what());
  }
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, const Dataset& dataset, Forecaster& forecaster) {
  config.validate();
  dataset.validate();
  const std::optional<NormalizationParams> norm =
      config.use_tokon ? config.normalization : std::optional<NormalizationParams>{};

  std::vector<ForecastRequest> requests;
  requests.reserve(dataset.records.size());
  for (const auto& r : dataset.records) requests.push_back(make_request(r, config.prompt_kind, norm));
  const auto responses =
      forecast_batch(requests, forecaster, config.backend.max_retries, config.backend.parallelism);

  ExperimentOutcome outcome;
  outcome.results.reserve(responses.size());
  json records = json::array();
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto& rec = dataset.records[i];
    const auto& resp = responses[i];
    SeriesResult sr;
    sr.id = rec.id;
    sr.target.assign(rec.target.values().begin(), rec.target.values().end());
    sr.failed = resp.failed;
    sr.attempts = resp.attempts;
    sr.raw_text = resp.raw_text;
    if (!resp.failed) {
      sr.prediction = norm ? denormalize_values(resp.parsed_values, norm->stats, norm->target) : resp.parsed_values;
    }
    records.push_back({{"id", sr.id},
                       {"prediction", sr.prediction},
                       {"target", sr.target},
                       {"failed", sr.failed},
                       {"attempts", sr.attempts},
                       {"raw_text", sr.raw_text},
                       {"error", resp.error}});
    outcome.results.push_back(std::move(sr));
  }
  outcome.report = per_step_metrics(outcome.results, dataset.horizon, config.horizon_eval);

  json cfg = {{"dataset_path", config.dataset_path.string()},
              {"dataset_name", dataset.name},
              {"horizon", dataset.horizon},
              {"prompt_kind", to_string(config.prompt_kind)},
              {"use_tokon", config.use_tokon},
              {"backend", backend_json(config.backend)}};
  cfg["horizon_eval"] = config.horizon_eval ? json(*config.horizon_eval) : json(nullptr);
  if (norm) cfg["normalization"] = to_json(*norm);
  outcome.document = {{"tool", "tokon"},
                      {"created_at", utc_now()},
                      {"config", cfg},
                      {"records", records},
                      {"metrics", to_json(outcome.report)}};
  return outcome;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset dataset = read_records(config.dataset_path);
  auto forecaster = make_forecaster(config.backend);
  return run_experiment(config, dataset, *forecaster);
}

void write_document_atomically(const json& document, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out << document.dump(2) << '\n';
    if (!out) throw Error(Errc::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ResultsFile read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  ResultsFile file;
  try {
    file.document = json::parse(in);
    const auto& cfg = file.document.at("config");
    file.horizon = cfg.at("horizon").get<std::size_t>();
    file.prompt_kind = cfg.at("prompt_kind").get<std::string>();
    for (const auto& r : file.document.at("records")) {
      SeriesResult sr;
      sr.id = r.at("id").get<std::string>();
      sr.prediction = r.at("prediction").get<std::vector<double>>();
      sr.target = r.at("target").get<std::vector<double>>();
      sr.failed = r.at("failed").get<bool>();
      sr.attempts = r.value("attempts", 0);
      sr.raw_text = r.value("raw_text", std::string());
      file.results.push_back(std::move(sr));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.string() + ": " + e.what());
  }
  return file;
}

MetricReport rescore(const ResultsFile& file, std::optional<std::size_t> eval_steps) {
  if (!eval_steps) {
    const auto& he = file.document.at("config").at("horizon_eval");
    if (!he.is_null()) eval_steps = he.get<std::size_t>();
  }
  return per_step_metrics(file.results, file.horizon, eval_steps);
}

void write_metric_table(std::ostream& out, const MetricReport& report) {
  out << "step\trmse\tmae\n";
  char buf[128];
  for (std::size_t k = 0; k < report.rmse_per_step.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\n", k + 1, report.rmse_per_step[k], report.mae_per_step[k]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "avg\t%.17g\t%.17g\n", report.rmse_avg, report.mae_avg);
  out << buf;
}

void write_normalized_table(std::ostream& out, const std::map<PromptKind, MetricReport>& reports) {
  const auto table = normalized_per_step_table(reports);
  out << "step";
  for (const auto& [kind, r] : reports) out << '\t' << to_string(kind);
  out << '\n';
  char buf[64];
  for (std::size_t k = 0; k < table.front().size(); ++k) {
    out << k + 1;
    for (const auto& row : table) {
      std::snprintf(buf, sizeof buf, "\t%.17g", row[k]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace tokon
