#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clinagent {

/// Canonical entity key: NFC, lowercased, punctuation and symbols replaced
/// by spaces, whitespace runs collapsed, trimmed. Idempotent.
std::string normalize_name(std::string_view name);

/// Whitespace tokens of normalize_name(text).
std::vector<std::string> tokenize(std::string_view text);

/// Levenshtein distance over Unicode code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Number of Unicode code points in a UTF-8 string.
std::size_t code_point_length(std::string_view utf8);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Renders a rate with at most four decimals, keeping at least one
/// ("1.0", "0.3597", "0.25").
std::string format_rate(double value);

std::string to_lower_ascii(std::string_view s);

}  // namespace clinagent
