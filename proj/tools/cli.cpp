#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "tokon/datasets.hpp"
#include "tokon/error.hpp"
#include "tokon/evaluation.hpp"
#include "tokon/forecaster.hpp"
#include "tokon/kernels.hpp"
#include "tokon/prompting.hpp"
#include "tokon/search.hpp"
#include "tokon/tokenizer.hpp"

namespace tokon::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kBackends{"remote", "naive-last", "seasonal-naive", "quantizing-oracle", "replay"};
const std::vector<std::string> kPrompts{"baseline", "cot", "tsfc"};

struct BackendFlags {
  std::string kind = "naive-last";
  BackendConfig cfg;
  std::string replay;

  void attach(CLI::App* app) {
    app->add_option("--backend", kind, "Forecaster backend")->check(CLI::IsMember(kBackends))->capture_default_str();
    app->add_option("--api-base-url", cfg.api_base_url, "Chat-completions base URL")->capture_default_str();
    app->add_option("--model", cfg.model_name, "Remote model name")->capture_default_str();
    app->add_option("--temperature", cfg.temperature, "Sampling temperature")->capture_default_str();
    app->add_option("--max-retries", cfg.max_retries, "Re-queries after a parse failure")
        ->check(CLI::NonNegativeNumber)->capture_default_str();
    app->add_option("--parallelism", cfg.parallelism, "Requests in flight")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--seasonal-period", cfg.seasonal_period, "Lag for seasonal-naive")
        ->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--replay", replay, "Replay fixture (id<TAB>text lines)");
    app->add_option("--rpm", cfg.requests_per_minute, "Remote rate limit, requests/minute (0 = off)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--timeout", cfg.timeout_seconds, "Remote timeout in seconds")->check(CLI::PositiveNumber);
  }

  BackendConfig build() {
    cfg.kind = backend_kind_from_string(kind);
    cfg.replay_path = replay;
    cfg.validate();
    return cfg;
  }
};

struct TokonFlags {
  bool enabled = false;
  std::string params_path;

  void attach(CLI::App* app) {
    app->add_flag("--tokon", enabled, "Normalize contexts to single-token integers");
    app->add_option("--params", params_path, "Normalization params JSON (from `search --params-out`)")
        ->check(CLI::ExistingFile);
  }

  std::optional<NormalizationParams> load() const {
    if (!enabled) return std::nullopt;
    if (params_path.empty()) throw CLI::ValidationError("--params", "required with --tokon");
    std::ifstream in(params_path);
    return normalization_from_json(json::parse(in));
  }
};

Vocab vocab_from_flag(const std::string& flag) {
  return flag == "synthetic" ? Vocab::synthetic_integer() : load_vocab(flag);
}

void write_json_out(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error(Errc::Io, "cannot write " + path);
  f << j.dump(2) << '\n';
}

json stats_json(const DomainStats& s) {
  return {{"mean", s.mean}, {"std_dev", s.std_dev}, {"sample_count", s.sample_count}};
}

DomainStats stats_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  const auto j = json::parse(in);
  return {j.at("mean").get<double>(), j.at("std_dev").get<double>(), j.value("sample_count", std::size_t{0})};
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"tokon: tokenization-optimized normalization for LLM time-series forecasting", "tokon"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key/value config file (INI/TOML style)");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for any randomized backend (the core is deterministic)");

  // ingest-ihepc
  auto* ihepc = app.add_subcommand("ingest-ihepc", "Build the hourly AIHEPC dataset from the UCI IHEPC file");
  std::string ih_input, ih_out;
  IhepcOptions ih_opts;
  ihepc->add_option("--input", ih_input, "household_power_consumption.txt")->required()->check(CLI::ExistingFile);
  ihepc->add_option("--out", ih_out, "Output directory")->required();
  ihepc->add_option("--context-len", ih_opts.context_len)->check(CLI::PositiveNumber)->capture_default_str();
  ihepc->add_option("--horizon", ih_opts.horizon)->check(CLI::PositiveNumber)->capture_default_str();
  ihepc->add_option("--max-series", ih_opts.max_series)->check(CLI::PositiveNumber)->capture_default_str();
  ihepc->add_option("--min-valid-minutes", ih_opts.min_valid_minutes)->check(CLI::Range(1, 60))->capture_default_str();

  // ingest-m4
  auto* m4 = app.add_subcommand("ingest-m4", "Build the SM4 subset from the M4 monthly training table");
  std::string m4_input, m4_out;
  M4Options m4_opts;
  m4->add_option("--input", m4_input, "Monthly-train.csv")->required()->check(CLI::ExistingFile);
  m4->add_option("--out", m4_out, "Output directory")->required();
  m4->add_option("--lengths", m4_opts.lengths)->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  m4->add_option("--counts", m4_opts.counts)->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  m4->add_option("--horizon", m4_opts.horizon)->check(CLI::PositiveNumber)->capture_default_str();

  // stats
  auto* stats = app.add_subcommand("stats", "Domain mean/std over the context values of the first N records");
  std::string st_dataset, st_out;
  std::size_t st_first = 100;
  stats->add_option("--dataset", st_dataset)->required()->check(CLI::ExistingFile);
  stats->add_option("--first", st_first, "Calibration records")->check(CLI::PositiveNumber)->capture_default_str();
  stats->add_option("--out", st_out, "Write JSON here instead of stdout");

  // search
  auto* search = app.add_subcommand("search", "Golden-section search for the target standard deviation");
  std::string se_dataset, se_stats, se_trace, se_params_out, se_cost = "sse", se_prompt = "baseline", se_vocab = "synthetic";
  std::size_t se_calibration = 100;
  SearchConfig se_cfg;
  bool se_literal = false, se_dry = false;
  BackendFlags se_backend;
  search->add_option("--dataset", se_dataset)->required()->check(CLI::ExistingFile);
  search->add_option("--stats", se_stats, "Stats JSON; computed from the calibration records when absent")
      ->check(CLI::ExistingFile);
  search->add_option("--calibration", se_calibration, "First N records form the calibration set")
      ->check(CLI::PositiveNumber)->capture_default_str();
  search->add_option("--epsilon", se_cfg.bracket.epsilon)->check(CLI::PositiveNumber)->capture_default_str();
  search->add_option("--index-min", se_cfg.index_min)->capture_default_str();
  search->add_option("--index-max", se_cfg.index_max)->capture_default_str();
  search->add_option("--max-iterations", se_cfg.bracket.max_iterations)->check(CLI::PositiveNumber)->capture_default_str();
  search->add_option("--cost", se_cost)->check(CLI::IsMember({"sse", "sae"}))->capture_default_str();
  search->add_option("--prompt", se_prompt)->check(CLI::IsMember(kPrompts))->capture_default_str();
  search->add_flag("--verbatim-update", se_literal, "Use the verbatim interval update rule");
  search->add_option("--trace", se_trace, "Trace TSV path (default: <dataset>.trace.tsv)");
  search->add_option("--params-out", se_params_out, "Write the resulting normalization params JSON");
  search->add_flag("--dry-run", se_dry, "Render first-probe prompts and count tokens; no forecasts");
  search->add_option("--vocab", se_vocab, "synthetic or a BPE rank file (dry run)")->capture_default_str();
  se_backend.attach(search);

  // forecast
  auto* fc = app.add_subcommand("forecast", "Forecast every record and write a results document");
  std::string fc_dataset, fc_out, fc_prompt = "baseline", fc_vocab = "synthetic";
  std::size_t fc_first_steps = 0;
  bool fc_dry = false;
  BackendFlags fc_backend;
  TokonFlags fc_tokon;
  fc->add_option("--dataset", fc_dataset)->required()->check(CLI::ExistingFile);
  fc->add_option("--out", fc_out, "Results JSON path");
  fc->add_option("--prompt", fc_prompt)->check(CLI::IsMember(kPrompts))->capture_default_str();
  fc->add_option("--first-steps", fc_first_steps, "Score only the first N steps")->check(CLI::PositiveNumber);
  fc->add_flag("--dry-run", fc_dry, "Render prompts and count tokens; no forecasts");
  fc->add_option("--vocab", fc_vocab, "synthetic or a BPE rank file (dry run)")->capture_default_str();
  fc_backend.attach(fc);
  fc_tokon.attach(fc);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Re-score results documents");
  std::vector<std::string> ev_results;
  std::string ev_table, ev_norm_table;
  std::size_t ev_first_steps = 0;
  ev->add_option("--results", ev_results, "Results JSON (repeatable)")->required()->check(CLI::ExistingFile);
  ev->add_option("--first-steps", ev_first_steps)->check(CLI::PositiveNumber);
  ev->add_option("--table", ev_table, "Per-step RMSE/MAE TSV (first results file)");
  ev->add_option("--normalized-table", ev_norm_table, "Per-step RMSE / global minimum, one column per prompt kind");

  // count-tokens
  auto* ct = app.add_subcommand("count-tokens", "Compare token counts of raw and normalized renderings");
  std::string ct_raw, ct_norm, ct_vocab = "synthetic";
  ct->add_option("--raw", ct_raw)->required();
  ct->add_option("--normalized", ct_norm)->required();
  ct->add_option("--vocab", ct_vocab, "synthetic or a BPE rank file")->capture_default_str();

  // dump-prompt
  auto* dp = app.add_subcommand("dump-prompt", "Print the exact prompt for one record");
  std::string dp_dataset, dp_id, dp_prompt = "baseline";
  std::size_t dp_index = 0;
  TokonFlags dp_tokon;
  dp->add_option("--dataset", dp_dataset)->required()->check(CLI::ExistingFile);
  dp->add_option("--id", dp_id, "Record id");
  dp->add_option("--index", dp_index, "Record position when --id is absent")->capture_default_str();
  dp->add_option("--prompt", dp_prompt)->check(CLI::IsMember(kPrompts))->capture_default_str();
  dp_tokon.attach(dp);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (args.size() > 1 && !args[1].empty() && args[1][0] != '-' && app.get_subcommands().empty()) {
      err << "tokon: unknown subcommand '" << args[1] << "'\n" << app.help() << '\n';
      return 1;
    }
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  // Flag-level validation that CLI11 cannot express; nothing has been read or written yet.
  std::optional<NormalizationParams> fc_norm, dp_norm;
  BackendConfig fc_cfg, se_backend_cfg;
  try {
    if (*fc) {
      if (!fc_dry) fc_cfg = fc_backend.build();
      fc_norm = fc_tokon.load();
      if (!fc_dry && fc_out.empty()) throw CLI::ValidationError("--out", "required unless --dry-run");
      if (!fc_dry && fc_cfg.kind == BackendKind::Replay && fc_backend.replay.empty()) {
        throw CLI::ValidationError("--replay", "required with --backend replay");
      }
    }
    if (*search && !se_dry) se_backend_cfg = se_backend.build();
    if (*dp) dp_norm = dp_tokon.load();
    if (*search && se_cfg.index_min >= se_cfg.index_max) {
      throw CLI::ValidationError("--index-min", "must be below --index-max");
    }
  } catch (const CLI::Error& e) {
    err << "tokon: " << e.what() << '\n' << app.help() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "tokon: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*ihepc) {
      std::filesystem::create_directories(ih_out);
      const auto ds = ingest_ihepc(std::filesystem::path(ih_input), ih_opts);
      const auto path = std::filesystem::path(ih_out) / "aihepc.ndrec";
      const auto m = write_records(ds, path);
      out << json{{"records", path.string()}, {"manifest", manifest_path_for(path).string()},
                  {"record_count", m.record_count}}.dump(2) << '\n';
    } else if (*m4) {
      std::filesystem::create_directories(m4_out);
      const auto ds = ingest_m4(std::filesystem::path(m4_input), m4_opts);
      const auto path = std::filesystem::path(m4_out) / "sm4.ndrec";
      const auto m = write_records(ds, path);
      out << json{{"records", path.string()}, {"manifest", manifest_path_for(path).string()},
                  {"record_count", m.record_count}}.dump(2) << '\n';
    } else if (*stats) {
      const auto ds = read_records(st_dataset);
      write_json_out(stats_json(calibration_stats(ds, st_first)), st_out, out);
    } else if (*search) {
      const auto ds = read_records(se_dataset);
      const DomainStats domain = se_stats.empty() ? calibration_stats(ds, se_calibration) : stats_from_file(se_stats);
      SearchConfig cfg = SearchConfig::for_range(se_cfg.index_min, se_cfg.index_max);
      cfg.bracket.epsilon = se_cfg.bracket.epsilon;
      cfg.bracket.max_iterations = se_cfg.bracket.max_iterations;
      cfg.bracket.rule = se_literal ? UpdateRule::Verbatim : UpdateRule::Textbook;
      cfg.cost_kind = cost_kind_from_string(se_cost);
      cfg.prompt_kind = prompt_kind_from_string(se_prompt);
      for (std::size_t i = 0; i < std::min(se_calibration, ds.records.size()); ++i) {
        cfg.calibration_ids.push_back(ds.records[i].id);
      }
      cfg.max_retries = se_backend.cfg.max_retries;
      cfg.parallelism = se_backend.cfg.parallelism;
      cfg.validate();

      if (se_dry) {
        const double probe = cfg.bracket.lo + (cfg.bracket.hi - cfg.bracket.lo) * golden_ratio_conjugate();
        const NormalizationParams params{domain, TargetParams(cfg.target_mean(), probe, cfg.index_min, cfg.index_max)};
        std::vector<std::string> prompts;
        for (const auto& id : cfg.calibration_ids) {
          prompts.push_back(make_request(*ds.find(id), cfg.prompt_kind, params).prompt.text);
        }
        const auto counts = kernels::count_tokens_batch(prompts, vocab_from_flag(se_vocab));
        std::size_t total = 0;
        for (auto c : counts) total += c;
        out << json{{"dry_run", true}, {"probe", probe}, {"prompts", prompts.size()}, {"prompt_tokens", total}}.dump(2)
            << '\n';
        return 0;
      }

      auto forecaster = make_forecaster(se_backend_cfg);
      const auto result = golden_section_search(cfg, ds, domain, *forecaster);
      const std::string trace_path =
          se_trace.empty() ? std::filesystem::path(se_dataset).replace_extension(".trace.tsv").string() : se_trace;
      {
        std::ofstream tf(trace_path);
        if (!tf) throw Error(Errc::Io, "cannot write " + trace_path);
        write_trace(tf, result.trace);
      }
      const NormalizationParams params{domain,
                                       TargetParams(cfg.target_mean(), std::max(result.sigma_t, kMinProbe),
                                                    cfg.index_min, cfg.index_max)};
      if (!se_params_out.empty()) write_json_out(to_json(params), se_params_out, out);
      out << json{{"sigma_t", result.sigma_t},
                  {"target_mean", cfg.target_mean()},
                  {"trace", trace_path},
                  {"iterations", result.trace.iterations.size()},
                  {"cost_evaluations", result.trace.cost_evaluations},
                  {"best_probe", result.trace.best_probe},
                  {"best_cost", result.trace.best_cost},
                  {"hit_max_iterations", result.trace.hit_max_iterations}}
                 .dump(2)
          << '\n';
      if (result.trace.hit_max_iterations) err << "tokon: search stopped at --max-iterations before converging\n";
    } else if (*fc) {
      const auto ds = read_records(fc_dataset);
      const auto kind = prompt_kind_from_string(fc_prompt);
      if (fc_dry) {
        const auto vocab = vocab_from_flag(fc_vocab);
        std::vector<std::string> prompts;
        for (const auto& r : ds.records) prompts.push_back(make_request(r, kind, fc_norm).prompt.text);
        const auto counts = kernels::count_tokens_batch(prompts, vocab);
        std::size_t total = 0;
        for (auto c : counts) total += c;
        out << json{{"dry_run", true}, {"prompts", prompts.size()}, {"prompt_tokens", total},
                    {"mean_prompt_tokens", prompts.empty() ? 0.0 : double(total) / double(prompts.size())}}
                   .dump(2)
            << '\n';
        return 0;
      }
      ExperimentConfig cfg;
      cfg.dataset_path = fc_dataset;
      cfg.prompt_kind = kind;
      cfg.use_tokon = fc_tokon.enabled;
      cfg.normalization = fc_norm;
      cfg.backend = fc_cfg;
      if (fc_first_steps > 0) cfg.horizon_eval = fc_first_steps;
      auto forecaster = make_forecaster(cfg.backend);
      const auto outcome = run_experiment(cfg, ds, *forecaster);
      write_document_atomically(outcome.document, fc_out);
      out << json{{"results", fc_out}, {"metrics", to_json(outcome.report)}}.dump(2) << '\n';
      if (outcome.report.n_failed > 0) err << "tokon: " << outcome.report.n_failed << " series failed\n";
    } else if (*ev) {
      std::optional<std::size_t> steps;
      if (ev_first_steps > 0) steps = ev_first_steps;
      std::map<PromptKind, MetricReport> by_kind;
      json reports = json::array();
      for (const auto& path : ev_results) {
        const auto file = read_results(path);
        const auto report = rescore(file, steps);
        reports.push_back({{"results", path}, {"prompt_kind", file.prompt_kind}, {"metrics", to_json(report)}});
        by_kind[prompt_kind_from_string(file.prompt_kind)] = report;
        if (!ev_table.empty() && path == ev_results.front()) {
          std::ofstream tf(ev_table);
          write_metric_table(tf, report);
        }
      }
      if (!ev_norm_table.empty()) {
        std::ofstream tf(ev_norm_table);
        write_normalized_table(tf, by_kind);
      }
      out << (reports.size() == 1 ? reports.front() : reports).dump(2) << '\n';
    } else if (*ct) {
      const auto r = count_series_tokens(ct_raw, ct_norm, vocab_from_flag(ct_vocab));
      out << json{{"raw_tokens", r.raw_tokens}, {"normalized_tokens", r.normalized_tokens},
                  {"reduction_factor", r.reduction_factor}}
                 .dump(2)
          << '\n';
    } else if (*dp) {
      const auto ds = read_records(dp_dataset);
      const DatasetRecord* rec = nullptr;
      if (!dp_id.empty()) {
        rec = ds.find(dp_id);
        if (rec == nullptr) throw Error(Errc::InvalidArgument, "no record with id '" + dp_id + "'");
      } else {
        if (dp_index >= ds.records.size()) throw Error(Errc::InvalidArgument, "--index past the last record");
        rec = &ds.records[dp_index];
      }
      out << make_request(*rec, prompt_kind_from_string(dp_prompt), dp_norm).prompt.text << '\n';
    }
  } catch (const std::exception& e) {
    err << "tokon: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace tokon::cli
