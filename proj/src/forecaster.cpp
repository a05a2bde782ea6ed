#include "tokon/forecaster.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "tokon/error.hpp"

namespace tokon {

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::RemoteLLM: return "remote";
    case BackendKind::NaiveLast: return "naive-last";
    case BackendKind::SeasonalNaive: return "seasonal-naive";
    case BackendKind::QuantizingOracle: return "quantizing-oracle";
    case BackendKind::Replay: return "replay";
  }
  return "naive-last";
}

BackendKind backend_kind_from_string(const std::string& s) {
  for (auto k : {BackendKind::RemoteLLM, BackendKind::NaiveLast, BackendKind::SeasonalNaive,
                 BackendKind::QuantizingOracle, BackendKind::Replay}) {
    if (to_string(k) == s) return k;
  }
  throw Error(Errc::InvalidArgument,
              "unknown backend '" + s + "' (remote|naive-last|seasonal-naive|quantizing-oracle|replay)");
}

void BackendConfig::validate() const {
  if (parallelism == 0) throw Error(Errc::InvalidArgument, "parallelism must be positive");
  if (max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries must be non-negative");
  switch (kind) {
    case BackendKind::RemoteLLM:
      if (api_base_url.empty()) throw Error(Errc::InvalidArgument, "remote backend needs api_base_url");
      if (model_name.empty()) throw Error(Errc::InvalidArgument, "remote backend needs model_name");
      if (!(requests_per_minute >= 0.0)) throw Error(Errc::InvalidArgument, "requests_per_minute must be >= 0");
      break;
    case BackendKind::SeasonalNaive:
      if (seasonal_period == 0) throw Error(Errc::InvalidArgument, "seasonal_period must be positive");
      break;
    case BackendKind::Replay:
      if (replay_path.empty()) throw Error(Errc::InvalidArgument, "replay backend needs replay_path");
      break;
    default: break;
  }
}

std::string render_numbers(std::span<const double> values) {
  std::string out;
  char buf[400];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    const auto res = std::to_chars(buf, buf + sizeof buf, values[i], std::chars_format::fixed);
    out.append(buf, res.ptr);
  }
  return out;
}

std::vector<double> parse_numeric_response(std::string_view raw_text, std::size_t horizon) {
  if (horizon == 0) throw Error(Errc::InvalidArgument, "horizon must be at least 1");
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };

  std::vector<double> found;
  std::size_t i = 0;
  const std::size_t n = raw_text.size();
  while (i < n && found.size() < horizon) {
    std::size_t start = i;
    bool negative = false;
    const char c = raw_text[i];
    if ((c == '-' || c == '+') && i + 1 < n && digit(raw_text[i + 1]) && (i == 0 || !alnum(raw_text[i - 1]))) {
      negative = c == '-';
      start = ++i;
    } else if (!digit(c)) {
      ++i;
      continue;
    }
    while (i < n && digit(raw_text[i])) ++i;
    if (i + 1 < n && raw_text[i] == '.' && digit(raw_text[i + 1])) {
      ++i;
      while (i < n && digit(raw_text[i])) ++i;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(raw_text.data() + start, raw_text.data() + i, value);
    if (ec != std::errc{} || !std::isfinite(value)) {
      throw Error(Errc::ParseFailure, "number out of range: " + std::string(raw_text.substr(start, i - start)));
    }
    found.push_back(negative ? -value : value);
  }
  if (found.empty()) throw Error(Errc::NoNumbers, "reply contains no numbers");
  if (found.size() < horizon) {
    throw Error(Errc::TooFewNumbers,
                "found " + std::to_string(found.size()) + " of " + std::to_string(horizon) + " values");
  }
  return found;
}

std::string escape_replay_text(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::map<std::string, std::string> load_replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open replay file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(Errc::MalformedLine, path.string() + " line " + std::to_string(line_no) + ": expected id<TAB>text");
    }
    std::string text;
    for (std::size_t i = tab + 1; i < line.size(); ++i) {
      if (line[i] == '\\' && i + 1 < line.size()) {
        const char e = line[++i];
        text += e == 'n' ? '\n' : e == 't' ? '\t' : e == 'r' ? '\r' : e;
      } else {
        text += line[i];
      }
    }
    if (!out.emplace(line.substr(0, tab), std::move(text)).second) {
      throw Error(Errc::MalformedLine, path.string() + " line " + std::to_string(line_no) + ": duplicate id");
    }
  }
  return out;
}

namespace {

class NaiveLastBackend final : public Forecaster {
public:
  std::string query(const ForecastRequest& req) override {
    if (req.context.empty()) throw Error(Errc::InvalidArgument, "empty context");
    const std::vector<double> out(req.horizon, req.context.back());
    return render_numbers(out);
  }
};

class SeasonalNaiveBackend final : public Forecaster {
public:
  explicit SeasonalNaiveBackend(std::size_t period) : period_(period) {}

  std::string query(const ForecastRequest& req) override {
    if (req.context.empty()) throw Error(Errc::InvalidArgument, "empty context");
    const std::size_t n = req.context.size();
    const std::size_t p = std::min(period_, n);
    std::vector<double> out(req.horizon);
    for (std::size_t h = 0; h < req.horizon; ++h) out[h] = req.context[n - p + h % p];
    return render_numbers(out);
  }

private:
  std::size_t period_;
};

class QuantizingOracleBackend final : public Forecaster {
public:
  std::string query(const ForecastRequest& req) override {
    if (!req.normalization) return render_numbers(req.reference_target);
    std::vector<double> tokens;
    tokens.reserve(req.reference_target.size());
    for (double y : req.reference_target) {
      tokens.push_back(static_cast<double>(
          normalize_value(y, req.normalization->stats, req.normalization->target)));
    }
    return render_numbers(tokens);
  }
};

class ReplayBackend final : public Forecaster {
public:
  explicit ReplayBackend(const std::filesystem::path& path) : replies_(load_replay(path)) {}

  std::string query(const ForecastRequest& req) override {
    const auto it = replies_.find(req.series_id);
    if (it == replies_.end()) throw Error(Errc::InvalidArgument, "no replay entry for '" + req.series_id + "'");
    return it->second;
  }

private:
  std::map<std::string, std::string> replies_;
};

class TokenBucket {
public:
  explicit TokenBucket(double per_minute)
      : rate_(per_minute / 60.0), capacity_(std::max(1.0, per_minute)), tokens_(capacity_),
        last_(std::chrono::steady_clock::now()) {}

  void acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

private:
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

class RemoteBackend final : public Forecaster {
public:
  explicit RemoteBackend(const BackendConfig& cfg) : cfg_(cfg), limiter_(cfg.requests_per_minute) {
    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
      throw Error(Errc::AuthError, std::string("environment variable ") + kApiKeyEnv + " is not set");
    }
    api_key_ = key;
    const auto scheme = cfg.api_base_url.find("://");
    if (scheme == std::string::npos) throw Error(Errc::InvalidArgument, "api_base_url needs a scheme");
    const auto slash = cfg.api_base_url.find('/', scheme + 3);
    host_ = cfg.api_base_url.substr(0, slash);
    path_ = slash == std::string::npos ? std::string() : cfg.api_base_url.substr(slash);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/chat/completions";
  }

  bool requery_on_parse_failure() const override { return true; }

  std::string query(const ForecastRequest& req) override {
    limiter_.acquire();
    httplib::Client client(host_);
    const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    const nlohmann::json body = {
        {"model", cfg_.model_name},
        {"temperature", cfg_.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt.text}}})},
    };
    const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error(Errc::NetworkError, "request failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403) {
      throw Error(Errc::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) throw Error(Errc::NetworkError, "HTTP " + std::to_string(res->status));
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::ParseFailure, "unexpected chat-completion payload");
    }
  }

private:
  BackendConfig cfg_;
  TokenBucket limiter_;
  std::string api_key_;
  std::string host_;
  std::string path_;
};

}  // namespace

std::unique_ptr<Forecaster> make_forecaster(const BackendConfig& config) {
  config.validate();
  switch (config.kind) {
    case BackendKind::RemoteLLM: return std::make_unique<RemoteBackend>(config);
    case BackendKind::NaiveLast: return std::make_unique<NaiveLastBackend>();
    case BackendKind::SeasonalNaive: return std::make_unique<SeasonalNaiveBackend>(config.seasonal_period);
    case BackendKind::QuantizingOracle: return std::make_unique<QuantizingOracleBackend>();
    case BackendKind::Replay: return std::make_unique<ReplayBackend>(config.replay_path);
  }
  throw Error(Errc::InvalidArgument, "unhandled backend kind");
}

ForecastResponse respond(Forecaster& backend, const ForecastRequest& request, int max_retries) {
  if (request.horizon == 0) throw Error(Errc::InvalidArgument, "horizon must be at least 1");
  const bool requery = backend.requery_on_parse_failure();
  const int budget = requery ? 1 + std::max(0, max_retries) : 1;

  ForecastResponse resp;
  for (int attempt = 0; attempt < budget; ++attempt) {
    ++resp.attempts;
    try {
      resp.raw_text = backend.query(request);
    } catch (const Error& e) {
      if (e.code() == Errc::AuthError) throw;
      resp.error = e.what();
      continue;
    }
    try {
      resp.parsed_values = parse_numeric_response(resp.raw_text, request.horizon);
      resp.failed = false;
      resp.error.clear();
      return resp;
    } catch (const Error& e) {
      resp.error = e.what();
    }
  }
  resp.parsed_values.clear();
  resp.failed = true;
  return resp;
}

ForecastResponse forecast(const ForecastRequest& request, const BackendConfig& config) {
  auto backend = make_forecaster(config);
  return respond(*backend, request, config.max_retries);
}

std::vector<ForecastResponse> forecast_batch(std::span<const ForecastRequest> requests,
                                             Forecaster& backend, int max_retries,
                                             std::size_t parallelism) {
  std::vector<ForecastResponse> out(requests.size());
  const auto n = static_cast<std::ptrdiff_t>(requests.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(parallelism, requests.size())));
  std::exception_ptr fatal;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = respond(backend, requests[i], max_retries);
    } catch (...) {
#pragma omp critical(tokon_batch_failure)
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);
  return out;
}

}  // namespace tokon
