#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace uncttp::text {

/// Lower-cases ASCII letters; other bytes (including UTF-8 continuation
/// bytes) pass through unchanged.
std::string casefold(std::string_view s);

/// Strips leading/trailing ASCII whitespace.
std::string_view trim(std::string_view s);

/// Label comparison rule: case-folded and whitespace-trimmed equality.
bool labels_equal(std::string_view a, std::string_view b);

/// Word characters for boundary checks: ASCII alphanumerics, '_' and any
/// non-ASCII byte.
bool is_word_char(char c);

/// Case-folded tokens, split on whitespace and ASCII punctuation.
std::vector<std::string> tokenize(std::string_view s);

/// 64-bit FNV-1a; stable across platforms, used to derive per-instance
/// RNG streams.
std::uint64_t fnv1a(std::string_view s);

}  // namespace uncttp::text
