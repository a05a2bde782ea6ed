#include "tokon/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokon/error.hpp"

namespace tokon {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// IHEPC dates are d/m/yyyy, times hh:mm:ss.
bool parse_ihepc_hour(std::string_view date, std::string_view time, Timestamp& out) {
  const auto d = split(trim(date), '/');
  const auto t = split(trim(time), ':');
  if (d.size() != 3 || t.size() < 2) return false;
  unsigned minute = 0;
  if (!parse_int(d[0], out.day) || !parse_int(d[1], out.month) || !parse_int(d[2], out.year) ||
      !parse_int(t[0], out.hour) || !parse_int(t[1], minute)) {
    return false;
  }
  return out.valid() && minute < 60;
}

Error unparsable(std::size_t line_no, const std::string& why) {
  return Error(Errc::UnparsableRow, "row " + std::to_string(line_no) + ": " + why);
}

}  // namespace

void Dataset::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.target.size() != horizon) {
      throw Error(Errc::SchemaViolation, "record " + r.id + ": target length " + std::to_string(r.target.size()) +
                                             " != horizon " + std::to_string(horizon));
    }
    if (!context_lengths.empty() &&
        std::find(context_lengths.begin(), context_lengths.end(), r.context.size()) == context_lengths.end()) {
      throw Error(Errc::SchemaViolation, "record " + r.id + ": undeclared context length " +
                                             std::to_string(r.context.size()));
    }
  }
}

const DatasetRecord* Dataset::find(const std::string& id) const {
  const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == id; });
  return it == records.end() ? nullptr : &*it;
}

HourlySeries ihepc_hourly(std::istream& in, std::size_t min_valid_minutes) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MissingColumn, "input has no header row");
  const auto header = split(line, ';');
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw Error(Errc::MissingColumn, "header lacks column '" + std::string(name) + "'");
  };
  const std::size_t date_col = column("Date");
  const std::size_t time_col = column("Time");
  const std::size_t value_col = column("Global_intensity");
  const std::size_t needed = std::max({date_col, time_col, value_col}) + 1;

  std::map<Timestamp, std::vector<double>> hours;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ';');
    if (fields.size() < needed) throw unparsable(line_no, "expected at least " + std::to_string(needed) + " fields");
    Timestamp hour;
    if (!parse_ihepc_hour(fields[date_col], fields[time_col], hour)) throw unparsable(line_no, "bad date/time");
    auto& bucket = hours[hour];
    const auto raw = trim(fields[value_col]);
    if (raw == "?" || raw.empty()) continue;
    double v = 0.0;
    if (!parse_double(raw, v)) throw unparsable(line_no, "bad Global_intensity '" + std::string(raw) + "'");
    bucket.push_back(v);
  }

  HourlySeries out;
  if (hours.empty()) return out;
  out.first_hour = hours.begin()->first;
  const Timestamp last = hours.rbegin()->first;
  auto it = hours.begin();
  for (Timestamp t = out.first_hour; t <= last; t = t.plus_hours(1)) {
    double value = std::numeric_limits<double>::quiet_NaN();
    if (it != hours.end() && it->first == t) {
      auto& minutes = it->second;
      if (minutes.size() >= min_valid_minutes && !minutes.empty()) {
        // Sorted summation keeps the average independent of row order.
        std::sort(minutes.begin(), minutes.end());
        value = std::accumulate(minutes.begin(), minutes.end(), 0.0) / static_cast<double>(minutes.size());
      }
      ++it;
    }
    out.values.push_back(value);
  }
  return out;
}

Dataset ingest_ihepc(std::istream& in, const IhepcOptions& options) {
  if (options.horizon == 0 || options.context_len == 0) {
    throw Error(Errc::InvalidArgument, "horizon and context length must be positive");
  }
  const HourlySeries hourly = ihepc_hourly(in, options.min_valid_minutes);
  Dataset ds;
  ds.name = "aihepc";
  ds.horizon = options.horizon;
  ds.context_lengths = {options.context_len};

  const std::size_t window = options.context_len + options.horizon;
  const auto& v = hourly.values;
  for (std::size_t start = 0; start + window <= v.size() && ds.records.size() < options.max_series;
       start += window) {
    const auto first = v.begin() + static_cast<std::ptrdiff_t>(start);
    const auto split_at = first + static_cast<std::ptrdiff_t>(options.context_len);
    const auto last = first + static_cast<std::ptrdiff_t>(window);
    if (std::any_of(first, last, [](double x) { return std::isnan(x); })) continue;
    DatasetRecord r;
    r.id = "aihepc-" + std::to_string(start / window);
    r.granularity = Granularity::Hourly;
    r.start = hourly.first_hour.plus_hours(static_cast<std::int64_t>(start));
    r.context = TimeSeries({first, split_at});
    r.target = TimeSeries({split_at, last});
    r.date_source = DateSource::Source;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

Dataset ingest_ihepc(const std::filesystem::path& input, const IhepcOptions& options) {
  std::ifstream in(input);
  if (!in) throw Error(Errc::Io, "cannot open " + input.string());
  return ingest_ihepc(in, options);
}

Dataset ingest_m4(std::istream& in, const M4Options& options) {
  if (options.lengths.size() != options.counts.size() || options.lengths.empty()) {
    throw Error(Errc::InvalidArgument, "lengths and counts must be non-empty and the same size");
  }
  if (options.horizon == 0) throw Error(Errc::InvalidArgument, "horizon must be positive");

  struct Source {
    std::string id;
    std::optional<Timestamp> start;
    std::vector<double> values;
  };
  std::vector<Source> series;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    const auto first = unquote(fields[0]);
    if (line_no == 1 && (first == "V1" || first == "id" || first == "ID")) continue;
    if (first.empty()) throw unparsable(line_no, "missing series id");
    Source s{std::string(first), std::nullopt, {}};
    std::size_t k = 1;
    if (fields.size() > 1) {
      const auto maybe_date = unquote(fields[1]);
      if (maybe_date.find('-') != std::string_view::npos && maybe_date.size() >= 8) {
        try {
          s.start = Timestamp::parse(std::string(maybe_date));
          k = 2;
        } catch (const Error&) {
        }
      }
    }
    for (; k < fields.size(); ++k) {
      const auto f = unquote(fields[k]);
      if (f.empty()) continue;
      double v = 0.0;
      if (!parse_double(f, v)) throw unparsable(line_no, "bad value '" + std::string(f) + "'");
      s.values.push_back(v);
    }
    series.push_back(std::move(s));
  }

  Dataset ds;
  ds.name = "sm4";
  ds.horizon = options.horizon;
  ds.context_lengths = options.lengths;
  std::vector<bool> used(series.size(), false);
  for (std::size_t li = 0; li < options.lengths.size(); ++li) {
    const std::size_t len = options.lengths[li];
    const std::size_t need = len + options.horizon;
    std::size_t taken = 0;
    for (std::size_t i = 0; i < series.size() && taken < options.counts[li]; ++i) {
      const auto& s = series[i];
      if (used[i] || s.values.size() < need) continue;
      used[i] = true;
      ++taken;
      const auto offset = s.values.size() - need;
      const auto first = s.values.begin() + static_cast<std::ptrdiff_t>(offset);
      DatasetRecord r;
      r.id = s.id;
      r.granularity = Granularity::Monthly;
      r.date_source = s.start ? DateSource::Source : DateSource::Synthesized;
      r.start = s.start.value_or(options.synthetic_epoch).plus_months(static_cast<std::int64_t>(offset));
      r.context = TimeSeries({first, first + static_cast<std::ptrdiff_t>(len)});
      r.target = TimeSeries({first + static_cast<std::ptrdiff_t>(len), s.values.end()});
      ds.records.push_back(std::move(r));
    }
    if (taken < options.counts[li]) {
      throw Error(Errc::InsufficientSeries, "only " + std::to_string(taken) + " series fit length " +
                                                std::to_string(len) + " (wanted " +
                                                std::to_string(options.counts[li]) + ")");
    }
  }
  return ds;
}

Dataset ingest_m4(const std::filesystem::path& input, const M4Options& options) {
  std::ifstream in(input);
  if (!in) throw Error(Errc::Io, "cannot open " + input.string());
  return ingest_m4(in, options);
}

std::filesystem::path manifest_path_for(const std::filesystem::path& records_path) {
  return records_path.parent_path() / (records_path.stem().string() + ".manifest.json");
}

namespace {

json stats_json(const DomainStats& s) {
  return {{"mean", s.mean}, {"std_dev", s.std_dev}, {"sample_count", s.sample_count}};
}

json record_json(const DatasetRecord& r) {
  return {
      {"id", r.id},
      {"granularity", to_string(r.granularity)},
      {"start", r.start.iso_string()},
      {"date_source", r.date_source == DateSource::Source ? "source" : "synthesized"},
      {"context", std::vector<double>(r.context.values().begin(), r.context.values().end())},
      {"target", std::vector<double>(r.target.values().begin(), r.target.values().end())},
  };
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.id = j.at("id").get<std::string>();
  if (r.id.empty()) throw Error(Errc::SchemaViolation, "empty id");
  r.granularity = granularity_from_string(j.at("granularity").get<std::string>());
  r.start = Timestamp::parse(j.at("start").get<std::string>());
  const auto source = j.value("date_source", std::string("source"));
  if (source != "source" && source != "synthesized") throw Error(Errc::SchemaViolation, "bad date_source");
  r.date_source = source == "source" ? DateSource::Source : DateSource::Synthesized;
  r.context = TimeSeries(j.at("context").get<std::vector<double>>());
  r.target = TimeSeries(j.at("target").get<std::vector<double>>());
  return r;
}

}  // namespace

DatasetManifest write_records(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    for (const auto& r : dataset.records) out << record_json(r).dump() << '\n';
    if (!out) throw Error(Errc::Io, "write failed for " + path.string());
  }
  DatasetManifest m{dataset.name, dataset.horizon, dataset.context_lengths, dataset.records.size(), dataset.stats};
  json mj = {{"name", m.name},
             {"horizon", m.horizon},
             {"context_lengths", m.context_lengths},
             {"record_count", m.record_count},
             {"records", path.filename().string()}};
  if (m.stats) mj["stats"] = stats_json(*m.stats);
  std::ofstream mout(manifest_path_for(path));
  if (!mout) throw Error(Errc::Io, "cannot write manifest for " + path.string());
  mout << mj.dump(2) << '\n';
  return m;
}

Dataset read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());

  Dataset ds;
  ds.name = path.stem().string();
  std::optional<std::size_t> declared_count;
  bool have_manifest = false;
  if (const auto mp = manifest_path_for(path); std::filesystem::exists(mp)) {
    std::ifstream min(mp);
    try {
      const auto mj = json::parse(min);
      ds.name = mj.at("name").get<std::string>();
      ds.horizon = mj.at("horizon").get<std::size_t>();
      ds.context_lengths = mj.at("context_lengths").get<std::vector<std::size_t>>();
      declared_count = mj.at("record_count").get<std::size_t>();
      if (mj.contains("stats")) {
        const auto& s = mj.at("stats");
        ds.stats = DomainStats(s.at("mean").get<double>(), s.at("std_dev").get<double>(),
                               s.at("sample_count").get<std::size_t>());
      }
      have_manifest = true;
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaViolation, mp.string() + ": " + e.what());
    }
  }

  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto violation = [&](const std::string& why) {
      return Error(Errc::SchemaViolation, path.string() + " line " + std::to_string(line_no) + ": " + why);
    };
    DatasetRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw violation(e.what());
    } catch (const Error& e) {
      throw violation(e.what());
    }
    if (!have_manifest && ds.records.empty()) ds.horizon = r.target.size();
    if (r.target.size() != ds.horizon) {
      throw violation("target length " + std::to_string(r.target.size()) + " != horizon " +
                      std::to_string(ds.horizon));
    }
    if (have_manifest && std::find(ds.context_lengths.begin(), ds.context_lengths.end(), r.context.size()) ==
                             ds.context_lengths.end()) {
      throw violation("context length " + std::to_string(r.context.size()) + " not declared in manifest");
    }
    if (!ids.insert(r.id).second) throw violation("duplicate id '" + r.id + "'");
    ds.records.push_back(std::move(r));
  }
  if (!have_manifest) {
    std::set<std::size_t> lengths;
    for (const auto& r : ds.records) lengths.insert(r.context.size());
    ds.context_lengths.assign(lengths.begin(), lengths.end());
  }
  if (declared_count && *declared_count != ds.records.size()) {
    throw Error(Errc::SchemaViolation, "manifest declares " + std::to_string(*declared_count) +
                                           " records, file holds " + std::to_string(ds.records.size()));
  }
  return ds;
}

DomainStats calibration_stats(const Dataset& dataset, std::size_t count) {
  const std::size_t n = std::min(count, dataset.records.size());
  if (n == 0) throw Error(Errc::EmptyInput, "no records to calibrate on");
  std::vector<TimeSeries> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.push_back(dataset.records[i].context);
  return compute_domain_stats(pool);
}

}  // namespace tokon
