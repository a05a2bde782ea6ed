#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>

namespace tokon {

enum class VocabMode { LoadedBPE, SyntheticInteger };

/// Byte-sequence -> merge rank table. Immutable once built.
class Vocab {
public:
  /// Single bytes, the separator ", " and the integers "0".."999".
  static Vocab synthetic_integer();
  static Vocab from_ranks(std::unordered_map<std::string, std::int64_t> ranks);

  VocabMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return ranks_.size(); }
  bool empty() const noexcept { return ranks_.empty(); }

  /// Rank of `bytes`, or -1 when absent.
  std::int64_t rank(std::string_view bytes) const;

private:
  Vocab(VocabMode mode, std::unordered_map<std::string, std::int64_t> ranks)
      : mode_(mode), ranks_(std::move(ranks)) {}

  VocabMode mode_;
  std::unordered_map<std::string, std::int64_t> ranks_;
};

/// Reads a rank file: one `<base64 bytes> <rank>` pair per line.
Vocab load_vocab(const std::filesystem::path& path);
Vocab parse_vocab(std::string_view content);

std::string base64_decode(std::string_view encoded);
std::string base64_encode(std::string_view bytes);

std::size_t encode_count(std::string_view text, const Vocab& vocab);

struct TokenCountReport {
  std::size_t raw_tokens = 0;
  std::size_t normalized_tokens = 0;
  double reduction_factor = 0.0;
};

TokenCountReport count_series_tokens(std::string_view raw_text, std::string_view normalized_text,
                                     const Vocab& vocab);

}  // namespace tokon
