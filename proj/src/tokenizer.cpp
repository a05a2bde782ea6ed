#include "tokon/tokenizer.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "tokon/error.hpp"

namespace tokon {

namespace {

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int base64_value(char c) {
  const auto pos = kBase64Alphabet.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

constexpr std::int64_t kNoRank = std::numeric_limits<std::int64_t>::max();

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Greedy longest match over single bytes, ", " and canonical integers 0..999.
std::size_t synthetic_count(std::string_view text) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = 1;
    if (is_digit(text[i]) && text[i] != '0') {
      while (len < 3 && i + len < text.size() && is_digit(text[i + len])) ++len;
    } else if (text[i] == ',' && i + 1 < text.size() && text[i + 1] == ' ') {
      len = 2;
    }
    i += len;
    ++count;
  }
  return count;
}

std::size_t bpe_count(std::string_view text, const Vocab& vocab) {
  if (text.empty()) return 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (vocab.rank(text.substr(i, 1)) < 0) {
      throw Error(Errc::UnencodableByte, "vocab has no token for byte " +
                                             std::to_string(static_cast<unsigned char>(text[i])) +
                                             " at offset " + std::to_string(i));
    }
  }

  // parts[i] is the start offset of the i-th token; the last entry is the end sentinel.
  // ranks[i] is the rank of merging token i with token i + 1.
  std::vector<std::size_t> parts(text.size() + 1);
  for (std::size_t i = 0; i <= text.size(); ++i) parts[i] = i;
  auto pair_rank = [&](std::size_t i) -> std::int64_t {
    if (i + 2 >= parts.size()) return kNoRank;
    const auto r = vocab.rank(text.substr(parts[i], parts[i + 2] - parts[i]));
    return r < 0 ? kNoRank : r;
  };
  std::vector<std::int64_t> ranks(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) ranks[i] = pair_rank(i);

  while (parts.size() > 2) {
    std::int64_t best = kNoRank;
    std::size_t at = 0;
    for (std::size_t i = 0; i + 2 < parts.size(); ++i) {
      if (ranks[i] < best) {
        best = ranks[i];
        at = i;
      }
    }
    if (best == kNoRank) break;
    parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    ranks.erase(ranks.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    ranks[at] = pair_rank(at);
    if (at > 0) ranks[at - 1] = pair_rank(at - 1);
  }
  return parts.size() - 1;
}

}  // namespace

Vocab Vocab::synthetic_integer() {
  std::unordered_map<std::string, std::int64_t> ranks;
  std::int64_t next = 0;
  for (int b = 0; b < 256; ++b) ranks.emplace(std::string(1, static_cast<char>(b)), next++);
  ranks.emplace(", ", next++);
  for (int n = 10; n < 1000; ++n) ranks.emplace(std::to_string(n), next++);
  return Vocab(VocabMode::SyntheticInteger, std::move(ranks));
}

Vocab Vocab::from_ranks(std::unordered_map<std::string, std::int64_t> ranks) {
  std::unordered_set<std::int64_t> seen;
  for (const auto& [bytes, r] : ranks) {
    if (!seen.insert(r).second) throw Error(Errc::DuplicateRank, "rank " + std::to_string(r) + " repeated");
  }
  return Vocab(VocabMode::LoadedBPE, std::move(ranks));
}

std::int64_t Vocab::rank(std::string_view bytes) const {
  const auto it = ranks_.find(std::string(bytes));
  return it == ranks_.end() ? -1 : it->second;
}

std::string base64_decode(std::string_view encoded) {
  if (encoded.size() % 4 != 0) throw Error(Errc::InvalidArgument, "base64 length not a multiple of 4");
  std::string out;
  out.reserve(encoded.size() / 4 * 3);
  for (std::size_t i = 0; i < encoded.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = encoded[i + k];
      if (c == '=' && i + 4 == encoded.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw Error(Errc::InvalidArgument, "base64 data after padding");
      v[k] = base64_value(c);
      if (v[k] < 0) throw Error(Errc::InvalidArgument, std::string("invalid base64 character '") + c + "'");
    }
    const unsigned triple = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<char>((triple >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<char>((triple >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<char>(triple & 0xFF));
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out;
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::size_t n = std::min<std::size_t>(3, bytes.size() - i);
    unsigned triple = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      triple <<= 8;
      if (k < n) triple |= static_cast<unsigned char>(bytes[i + k]);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      out.push_back(k <= n ? kBase64Alphabet[(triple >> (18 - 6 * k)) & 0x3F] : '=');
    }
  }
  return out;
}

Vocab parse_vocab(std::string_view content) {
  std::unordered_map<std::string, std::int64_t> ranks;
  std::unordered_set<std::int64_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    auto malformed = [&](const std::string& why) {
      return Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": " + why);
    };
    const auto space = line.find(' ');
    if (space == std::string_view::npos || line.find(' ', space + 1) != std::string_view::npos) {
      throw malformed("expected '<base64> <rank>'");
    }
    std::string bytes;
    try {
      bytes = base64_decode(line.substr(0, space));
    } catch (const Error& e) {
      throw malformed(e.what());
    }
    if (bytes.empty()) throw malformed("empty token");
    const auto rank_text = line.substr(space + 1);
    std::int64_t rank = 0;
    const auto [ptr, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
    if (ec != std::errc{} || ptr != rank_text.data() + rank_text.size() || rank < 0) {
      throw malformed("rank is not a non-negative integer");
    }
    if (!seen.insert(rank).second) {
      throw Error(Errc::DuplicateRank, "line " + std::to_string(line_no) + ": rank " + std::to_string(rank));
    }
    if (!ranks.emplace(std::move(bytes), rank).second) throw malformed("token listed twice");
  }
  return Vocab::from_ranks(std::move(ranks));
}

Vocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open vocab file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_vocab(buf.str());
}

std::size_t encode_count(std::string_view text, const Vocab& vocab) {
  if (vocab.mode() == VocabMode::SyntheticInteger) return synthetic_count(text);
  return bpe_count(text, vocab);
}

TokenCountReport count_series_tokens(std::string_view raw_text, std::string_view normalized_text,
                                     const Vocab& vocab) {
  if (raw_text.empty() || normalized_text.empty()) {
    throw Error(Errc::EmptyInput, "both renderings must be non-empty");
  }
  TokenCountReport r;
  r.raw_tokens = encode_count(raw_text, vocab);
  r.normalized_tokens = encode_count(normalized_text, vocab);
  r.reduction_factor = r.normalized_tokens > 0
                           ? static_cast<double>(r.raw_tokens) / static_cast<double>(r.normalized_tokens)
                           : 0.0;
  return r;
}

}  // namespace tokon
