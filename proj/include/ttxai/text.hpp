#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ttxai {

/// Byte range [begin, end) into an original UTF-8 string.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const ByteSpan&) const = default;
};

struct RawToken {
  std::string text;  // lowercased, NFC-normalized
  ByteSpan span;
};

/// Splits `text` into maximal runs of letters/digits (combining marks attach
/// to the preceding run), then NFC-normalizes and lowercases each run.
/// Spans index the original bytes of `text`. Invalid UTF-8 bytes act as
/// separators.
std::vector<RawToken> tokenize(std::string_view text);

/// Tokens only, without spans.
std::vector<std::string> tokenize_words(std::string_view text);

/// Number of Unicode code points in valid UTF-8 `s`.
std::size_t utf8_length(std::string_view s);

std::u32string to_u32(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep = " ");

/// Whitespace-delimited split (ASCII space, tab, CR, LF, VT, FF).
std::vector<std::string_view> split_whitespace(std::string_view s);

/// Prefix of `s` ending after its `max_tokens`-th whitespace-delimited token.
/// Inputs with at most `max_tokens` tokens are returned unchanged.
std::string truncate_tokens(std::string_view s, std::size_t max_tokens);

std::string_view trim(std::string_view s);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace ttxai
