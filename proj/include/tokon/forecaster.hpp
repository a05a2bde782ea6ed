#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokon/normalization.hpp"
#include "tokon/prompting.hpp"

namespace tokon {

struct ForecastRequest {
  Prompt prompt;
  std::size_t horizon = 1;
  std::string series_id;
  /// Context as embedded in the prompt (tokens when normalized, raw otherwise).
  std::vector<double> context;
  /// Ground truth in domain units; only the quantizing oracle reads it.
  std::vector<double> reference_target;
  /// Active normalization, when the prompt carries tokens.
  std::optional<NormalizationParams> normalization;
};

/// `parsed_values` are in prompt units; callers denormalize when needed.
struct ForecastResponse {
  std::string raw_text;
  std::vector<double> parsed_values;
  int attempts = 0;
  bool failed = true;
  std::string error;
};

enum class BackendKind { RemoteLLM, NaiveLast, SeasonalNaive, QuantizingOracle, Replay };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

struct BackendConfig {
  BackendKind kind = BackendKind::NaiveLast;
  std::string api_base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o-mini";
  double temperature = 0.0;
  int max_retries = 2;
  std::size_t parallelism = 1;
  std::size_t seasonal_period = 12;
  std::filesystem::path replay_path;
  /// Remote only; 0 disables the limiter.
  double requests_per_minute = 0.0;
  double timeout_seconds = 60.0;

  /// Throws InvalidArgument when a kind-specific field is missing.
  void validate() const;
};

inline constexpr const char* kApiKeyEnv = "TOKON_API_KEY";

/// A backend produces raw reply text; parsing and retries are shared.
class Forecaster {
public:
  virtual ~Forecaster() = default;

  virtual std::string query(const ForecastRequest& request) = 0;
  /// Whether a parse failure is worth asking again.
  virtual bool requery_on_parse_failure() const { return false; }
};

std::unique_ptr<Forecaster> make_forecaster(const BackendConfig& config);

/// Query, parse, retry up to `max_retries` re-queries where the backend allows it.
ForecastResponse respond(Forecaster& backend, const ForecastRequest& request, int max_retries);

ForecastResponse forecast(const ForecastRequest& request, const BackendConfig& config);

/// One response per request, in input order, with at most `parallelism` in flight.
std::vector<ForecastResponse> forecast_batch(std::span<const ForecastRequest> requests,
                                             Forecaster& backend, int max_retries,
                                             std::size_t parallelism);

std::vector<double> parse_numeric_response(std::string_view raw_text, std::size_t horizon);

/// Shortest round-trip decimal text without exponent, joined by ", ".
std::string render_numbers(std::span<const double> values);

/// `series_id<TAB>raw_text` lines; `\n`, `\t` and `\\` escapes are decoded.
std::map<std::string, std::string> load_replay(const std::filesystem::path& path);
std::string escape_replay_text(std::string_view text);

}  // namespace tokon
