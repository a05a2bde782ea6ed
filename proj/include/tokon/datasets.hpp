#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tokon/normalization.hpp"
#include "tokon/time_series.hpp"

namespace tokon {

enum class DateSource { Source, Synthesized };

struct DatasetRecord {
  std::string id;
  Granularity granularity = Granularity::Monthly;
  Timestamp start;
  TimeSeries context{{0.0}};
  TimeSeries target{{0.0}};
  DateSource date_source = DateSource::Source;

  bool operator==(const DatasetRecord&) const = default;
};

struct Dataset {
  std::string name;
  std::size_t horizon = 0;
  std::vector<std::size_t> context_lengths;
  std::vector<DatasetRecord> records;
  std::optional<DomainStats> stats;

  /// Throws SchemaViolation when a record breaks the declared horizon/context lengths.
  void validate() const;
  const DatasetRecord* find(const std::string& id) const;
};

struct DatasetManifest {
  std::string name;
  std::size_t horizon = 0;
  std::vector<std::size_t> context_lengths;
  std::size_t record_count = 0;
  std::optional<DomainStats> stats;
};

struct IhepcOptions {
  std::size_t horizon = 6;
  std::size_t context_len = 96;
  std::size_t max_series = 3000;
  /// Minimum valid minutes for an hour to count.
  std::size_t min_valid_minutes = 30;
};

/// Hourly Global_intensity averages; NaN marks an hour without enough valid minutes.
struct HourlySeries {
  Timestamp first_hour;
  std::vector<double> values;
};

HourlySeries ihepc_hourly(std::istream& in, std::size_t min_valid_minutes = 30);
Dataset ingest_ihepc(std::istream& in, const IhepcOptions& options = {});
Dataset ingest_ihepc(const std::filesystem::path& input, const IhepcOptions& options = {});

struct M4Options {
  std::vector<std::size_t> lengths{64, 49};
  std::vector<std::size_t> counts{965, 1104};
  std::size_t horizon = 18;
  Timestamp synthetic_epoch{2000, 1, 1, 0};
};

Dataset ingest_m4(std::istream& in, const M4Options& options = {});
Dataset ingest_m4(const std::filesystem::path& input, const M4Options& options = {});

/// Manifest path written next to a records file: `<stem>.manifest.json`.
std::filesystem::path manifest_path_for(const std::filesystem::path& records_path);

DatasetManifest write_records(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_records(const std::filesystem::path& path);

/// Context values of the first `count` records, pooled into one stats estimate.
DomainStats calibration_stats(const Dataset& dataset, std::size_t count);

}  // namespace tokon
