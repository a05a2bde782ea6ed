#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokon/datasets.hpp"
#include "tokon/forecaster.hpp"
#include "tokon/normalization.hpp"
#include "tokon/prompting.hpp"

namespace tokon {

double rmse(std::span<const double> predictions, std::span<const double> targets);
double mae(std::span<const double> predictions, std::span<const double> targets);

struct SeriesResult {
  std::string id;
  std::vector<double> prediction;  // domain units; empty when failed
  std::vector<double> target;
  bool failed = false;
  int attempts = 0;
  std::string raw_text;
};

struct MetricReport {
  std::vector<double> rmse_per_step;
  std::vector<double> mae_per_step;
  double rmse_avg = 0.0;
  double mae_avg = 0.0;
  std::size_t n_series = 0;
  std::size_t n_failed = 0;

  bool operator==(const MetricReport&) const = default;
};

/// Scores the first `eval_steps` steps (all of `horizon` when unset).
MetricReport per_step_metrics(std::span<const SeriesResult> results, std::size_t horizon,
                              std::optional<std::size_t> eval_steps = std::nullopt);

double improvement_percent(double baseline_value, double improved_value);

/// Rows follow the map order of prompt kinds; every entry divided by the global minimum.
std::vector<std::vector<double>> normalized_per_step_table(
    const std::map<PromptKind, MetricReport>& reports);

struct ExperimentConfig {
  std::filesystem::path dataset_path;
  PromptKind prompt_kind = PromptKind::Baseline;
  bool use_tokon = false;
  BackendConfig backend;
  std::optional<NormalizationParams> normalization;
  std::optional<std::size_t> horizon_eval;

  void validate() const;
};

struct ExperimentOutcome {
  MetricReport report;
  std::vector<SeriesResult> results;
  nlohmann::json document;
};

ExperimentOutcome run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                                 Forecaster& forecaster);
ExperimentOutcome run_experiment(const ExperimentConfig& config);

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const NormalizationParams& params);
NormalizationParams normalization_from_json(const nlohmann::json& j);

/// Writes to a sibling temp file and renames it into place.
void write_document_atomically(const nlohmann::json& document, const std::filesystem::path& path);

struct ResultsFile {
  nlohmann::json document;
  std::vector<SeriesResult> results;
  std::size_t horizon = 0;
  std::string prompt_kind;
};

ResultsFile read_results(const std::filesystem::path& path);
MetricReport rescore(const ResultsFile& file, std::optional<std::size_t> eval_steps = std::nullopt);

/// step, then one column per prompt kind.
void write_normalized_table(std::ostream& out, const std::map<PromptKind, MetricReport>& reports);
void write_metric_table(std::ostream& out, const MetricReport& report);

}  // namespace tokon
