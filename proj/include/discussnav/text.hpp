#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small string utilities used by the parsers and the oracle backend.
namespace discussnav::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
std::string collapse_spaces(std::string_view s);

/// Case-folded, punctuation stripped, whitespace collapsed. Hyphens become spaces.
std::string normalize(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

/// Case-insensitive search; npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);
/// Last case-insensitive occurrence; npos when absent.
std::size_t irfind(std::string_view haystack, std::string_view needle);

/// Removes a leading list marker: "1.", "2)", "-", "*", "•".
std::string_view strip_list_marker(std::string_view s);

/// Splits "1. walk past 2. stop" into {"walk past", "stop"}. Only splits on a
/// run of consecutive numbers starting at 1; otherwise returns the input as one item.
std::vector<std::string> split_enumerated(std::string_view s);

/// Items of a list block: one per line, or inline-enumerated, list markers removed,
/// trailing punctuation dropped, whitespace collapsed. Empty/"none" yields {}.
std::vector<std::string> list_items(std::string_view block);

std::string join(const std::vector<std::string>& items, std::string_view sep);

/// Parses a non-negative decimal integer at the start of s (after spaces).
std::optional<int> leading_int(std::string_view s, std::size_t* consumed = nullptr);

}  // namespace discussnav::text
