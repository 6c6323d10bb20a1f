#include "discussnav/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace discussnav::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Position and value of an enumeration marker "<n>." or "<n>)" at i, where i is
// at the start or preceded by whitespace.
std::optional<std::pair<int, std::size_t>> marker_at(std::string_view s, std::size_t i) {
  if (i > 0 && !is_space(s[i - 1])) return std::nullopt;
  std::size_t used = 0;
  auto n = leading_int(s.substr(i), &used);
  if (!n || used == 0) return std::nullopt;
  const std::size_t after = i + used;
  if (after >= s.size() || (s[after] != '.' && s[after] != ')')) return std::nullopt;
  if (after + 1 < s.size() && !is_space(s[after + 1])) return std::nullopt;
  return std::pair{*n, after + 1};
}

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), fold);
  return out;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending = true;
      continue;
    }
    if (pending && !out.empty()) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      out.push_back(fold(c));
    } else if (is_space(c) || c == '-' || c == '_' || c == '/') {
      out.push_back(' ');
    }
  }
  return collapse_spaces(out);
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (begin <= s.size()) {
    std::size_t end = s.find('\n', begin);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(begin, end - begin));
    begin = end + 1;
  }
  return out;
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
  if (needle.empty()) return from <= haystack.size() ? from : std::string_view::npos;
  if (haystack.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (fold(haystack[i + j]) != fold(needle[j])) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

std::size_t irfind(std::string_view haystack, std::string_view needle) {
  std::size_t found = std::string_view::npos;
  for (std::size_t at = ifind(haystack, needle); at != std::string_view::npos;
       at = ifind(haystack, needle, at + 1))
    found = at;
  return found;
}

std::string_view strip_list_marker(std::string_view s) {
  s = trim(s);
  if (s.starts_with("\xE2\x80\xA2")) return trim(s.substr(3));
  if (!s.empty() && (s.front() == '-' || s.front() == '*')) return trim(s.substr(1));
  if (auto m = marker_at(s, 0)) return trim(s.substr(m->second));
  return s;
}

std::vector<std::string> split_enumerated(std::string_view s) {
  std::vector<std::size_t> starts;  // marker start positions
  std::vector<std::size_t> bodies;  // positions right after markers
  int expected = 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto m = marker_at(s, i);
    if (m && m->first == expected) {
      starts.push_back(i);
      bodies.push_back(m->second);
      ++expected;
      i = m->second - 1;
    }
  }
  if (starts.size() < 2 || !trim(s.substr(0, starts.front())).empty())
    return {std::string(trim(s))};
  std::vector<std::string> out;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : s.size();
    out.emplace_back(trim(s.substr(bodies[k], end - bodies[k])));
  }
  return out;
}

std::vector<std::string> list_items(std::string_view block) {
  std::vector<std::string> out;
  for (auto line : split_lines(block)) {
    line = trim(line);
    if (line.empty()) continue;
    for (auto& piece : split_enumerated(line)) {
      std::string item = collapse_spaces(strip_list_marker(piece));
      while (!item.empty() && (item.back() == '.' || item.back() == ',' || item.back() == ';'))
        item.pop_back();
      item = collapse_spaces(item);
      if (item.size() >= 2 && (item.front() == '"' || item.front() == '\'') &&
          item.back() == item.front())
        item = item.substr(1, item.size() - 2);
      const std::string key = normalize(item);
      if (key.empty() || key == "none" || key == "n a" || key == "nothing") continue;
      out.push_back(std::move(item));
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::optional<int> leading_int(std::string_view s, std::size_t* consumed) {
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  std::size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (j == i || j - i > 6) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + j, value);
  if (ec != std::errc{}) return std::nullopt;
  if (consumed) *consumed = j;
  return value;
}

}  // namespace discussnav::text
