#include "discussnav/parsers.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <fmt/format.h>

#include "discussnav/text.hpp"

namespace discussnav {

Prediction Prediction::sector(int s) {
  if (s < 0 || s >= kSectorCount) throw std::out_of_range(fmt::format("sector {} outside 0..11", s));
  return Prediction(s);
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view skip_decoration(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '*' || s.front() == '"' ||
                        s.front() == '\'' || s.front() == '`' || s.front() == '[' || s.front() == '#' ||
                        s.front() == '_'))
    s.remove_prefix(1);
  return s;
}

// Positions of "prediction" used as a field label: preceded by a non-alphanumeric
// character and followed (after decoration) by ':' or by a line break / value.
std::vector<std::size_t> prediction_labels(std::string_view raw) {
  constexpr std::string_view kWord = "prediction";
  std::vector<std::size_t> out;
  for (std::size_t at = text::ifind(raw, kWord); at != std::string_view::npos;
       at = text::ifind(raw, kWord, at + 1)) {
    if (at > 0 && is_alnum(raw[at - 1])) continue;
    std::string_view rest = raw.substr(at + kWord.size());
    if (!rest.empty() && is_alnum(rest.front())) continue;  // "predictions", "predictional"
    std::string_view after = skip_decoration(rest);
    std::size_t line_begin = raw.rfind('\n', at);
    line_begin = line_begin == std::string_view::npos ? 0 : line_begin + 1;
    const bool line_start =
        raw.substr(line_begin, at - line_begin).find_first_not_of("*#-_ \t\"") == std::string_view::npos;
    if ((!after.empty() && (after.front() == ':' || after.front() == '=')) || line_start)
      out.push_back(at);
  }
  return out;
}

std::string_view after_label(std::string_view raw, std::size_t label_at, std::size_t label_len) {
  std::string_view rest = skip_decoration(raw.substr(label_at + label_len));
  if (!rest.empty() && (rest.front() == ':' || rest.front() == '=')) rest.remove_prefix(1);
  return rest;
}

std::optional<Prediction> read_prediction_value(std::string_view value, std::string* error) {
  value = skip_decoration(text::trim(value));
  constexpr std::string_view kDirection = "direction";
  if (text::ifind(value, kDirection) == 0) {
    value.remove_prefix(kDirection.size());
    value = skip_decoration(value);
    if (text::ifind(value, "id") == 0 && (value.size() == 2 || !is_alnum(value[2])))
      value = skip_decoration(value.substr(2));
    if (!value.empty() && value.front() == ':') value = skip_decoration(value.substr(1));
  }
  if (text::ifind(value, "stop") == 0 && (value.size() == 4 || !is_alnum(value[4])))
    return Prediction::stop();
  std::size_t used = 0;
  auto n = text::leading_int(value, &used);
  if (!n || (used < value.size() && std::isdigit(static_cast<unsigned char>(value[used])))) {
    if (!value.empty() && value.front() == '-' && text::leading_int(value.substr(1)))
      *error = "negative direction in Prediction field";
    else
      *error = "Prediction field holds neither a direction id nor stop";
    return std::nullopt;
  }
  if (*n >= kSectorCount) {
    *error = fmt::format("direction {} outside 0..11", *n);
    return std::nullopt;
  }
  return Prediction::sector(*n);
}

std::string strip_thought_label(std::string_view s) {
  s = text::trim(s);
  auto lines = text::split_lines(s);
  if (!lines.empty()) {
    std::string_view first = skip_decoration(lines.front());
    if (text::ifind(first, "thought") == 0) {
      std::size_t offset = static_cast<std::size_t>(first.data() - s.data()) + 7;
      std::string_view rest = skip_decoration(s.substr(offset));
      if (!rest.empty() && rest.front() == ':') s = rest.substr(1);
    }
  }
  std::string out(text::trim(s));
  while (!out.empty() && (out.back() == '*' || out.back() == '#')) out.pop_back();
  return std::string(text::trim(out));
}

struct Label {
  std::size_t at;
  std::size_t len;
};

std::optional<Label> find_label(std::string_view body, std::initializer_list<std::string_view> forms) {
  std::optional<Label> best;
  for (auto form : forms) {
    const auto at = text::ifind(body, form);
    if (at != std::string_view::npos && (!best || at < best->at)) best = Label{at, form.size()};
  }
  return best;
}

std::vector<std::string> bracket_items(std::string_view content) {
  content = text::trim(content);
  if (content.size() < 2 || content.front() != '[' || content.back() != ']') return text::list_items(content);
  std::vector<std::string> out;
  std::string_view inner = content.substr(1, content.size() - 2);
  std::size_t begin = 0;
  while (begin <= inner.size()) {
    std::size_t end = inner.find(',', begin);
    if (end == std::string_view::npos) end = inner.size();
    std::string item = text::collapse_spaces(inner.substr(begin, end - begin));
    if (item.size() >= 2 && (item.front() == '"' || item.front() == '\'') && item.back() == item.front())
      item = item.substr(1, item.size() - 2);
    if (!text::normalize(item).empty()) out.push_back(item);
    begin = end + 1;
  }
  return out;
}

bool same_sequence(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (text::normalize(a[i]) != text::normalize(b[i])) return false;
  return true;
}

}  // namespace

std::vector<std::string> parse_action_decomposition(std::string_view raw) {
  std::string_view block = raw;
  const auto label = text::irfind(raw, "actions:");
  if (label != std::string_view::npos) block = raw.substr(label + 8);
  std::vector<std::string> actions;
  for (auto& item : text::list_items(block)) {
    if (!item.empty() && item.back() == ':') continue;
    if (text::ifind(item, "thought:") == 0) continue;
    actions.push_back(std::move(item));
  }
  if (actions.empty()) throw MalformedResponse("action decomposition: no actions found");
  return actions;
}

LandmarkReply parse_landmark_extraction(std::string_view raw, const std::vector<std::string>& prior_actions) {
  const auto lm = text::ifind(raw, "landmarks:");
  if (lm == std::string_view::npos) throw MalformedResponse("landmark extraction: no 'Landmarks:' section");
  const auto corr = text::ifind(raw, "corrected actions");
  const std::size_t lm_body = lm + 10;
  const std::size_t lm_end = (corr != std::string_view::npos && corr > lm) ? corr : raw.size();

  LandmarkReply reply;
  for (auto& item : text::list_items(raw.substr(lm_body, lm_end - lm_body))) {
    std::string phrase = item;
    LandmarkKind kind = LandmarkKind::other;
    if (!phrase.empty() && phrase.back() == ')') {
      const auto open = phrase.rfind('(');
      if (open != std::string::npos) {
        if (auto k = parse_landmark_kind(std::string_view(phrase).substr(open + 1, phrase.size() - open - 2)))
          kind = *k;
        phrase = text::collapse_spaces(std::string_view(phrase).substr(0, open));
      }
    } else {
      for (std::string_view sep : {" - ", ": ", " | "}) {
        const auto at = phrase.rfind(sep);
        if (at == std::string::npos) continue;
        if (auto k = parse_landmark_kind(std::string_view(phrase).substr(at + sep.size()))) {
          kind = *k;
          phrase = text::collapse_spaces(std::string_view(phrase).substr(0, at));
          break;
        }
      }
    }
    if (phrase.size() >= 2 && (phrase.front() == '"' || phrase.front() == '\'') && phrase.back() == phrase.front())
      phrase = phrase.substr(1, phrase.size() - 2);
    if (text::normalize(phrase).empty()) continue;
    reply.landmarks.push_back({std::move(phrase), kind});
  }

  if (corr != std::string_view::npos) {
    const std::size_t begin = corr + 17;
    const std::size_t end = lm > corr ? lm : raw.size();
    std::string_view body = text::trim(raw.substr(begin, end - begin));
    if (!body.empty() && body.front() == ':') body.remove_prefix(1);
    auto corrected = text::list_items(body);
    if (!corrected.empty() && !same_sequence(corrected, prior_actions))
      reply.corrected_actions = std::move(corrected);
  }
  return reply;
}

ExecutionState parse_execution_state(std::string_view raw, const std::vector<std::string>& actions) {
  const auto labels = prediction_labels(raw);
  if (labels.empty()) throw MalformedResponse("completion estimation: missing Prediction field");
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    std::string_view body = after_label(raw, *it, 10);
    auto executed = find_label(body, {"executed actions"});
    auto in_progress = find_label(body, {"in-progress actions", "in progress actions", "inprogress actions"});
    auto waiting = find_label(body, {"actions waiting to be executed", "waiting actions"});
    if (!executed || !in_progress || !waiting) continue;

    std::array<std::pair<Label, int>, 3> order = {
        std::pair{*executed, 0}, std::pair{*in_progress, 1}, std::pair{*waiting, 2}};
    std::sort(order.begin(), order.end(), [](auto& a, auto& b) { return a.first.at < b.first.at; });
    std::array<std::vector<std::string>, 3> lists;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t begin = order[k].first.at + order[k].first.len;
      const std::size_t end = k + 1 < order.size() ? order[k + 1].first.at : body.size();
      std::string_view content = body.substr(begin, end - begin);
      content = text::trim(content);
      if (!content.empty() && content.front() == ':') content.remove_prefix(1);
      lists[order[k].second] = bracket_items(content);
    }

    auto known = [&](const std::string& item) {
      const std::string key = text::normalize(item);
      return std::any_of(actions.begin(), actions.end(), [&](const auto& a) { return text::normalize(a) == key; });
    };
    for (auto& list : lists) {
      std::vector<std::string> expanded;
      for (auto& item : list) {
        if (known(item) || item.find(',') == std::string::npos) {
          expanded.push_back(std::move(item));
          continue;
        }
        for (auto& piece : bracket_items("[" + item + "]")) expanded.push_back(std::move(piece));
      }
      list = std::move(expanded);
    }

    std::vector<int> owner(actions.size(), -1);
    for (int which = 0; which < 3; ++which) {
      for (const auto& item : lists[which]) {
        const std::string key = text::normalize(item);
        bool placed = false;
        bool seen = false;
        for (std::size_t a = 0; a < actions.size(); ++a) {
          if (text::normalize(actions[a]) != key) continue;
          seen = true;
          if (owner[a] < 0) {
            owner[a] = which;
            placed = true;
            break;
          }
        }
        if (!placed)
          throw MalformedResponse(seen ? "completion estimation: action '" + item + "' listed more than once"
                                       : "completion estimation: unknown action '" + item + "'");
      }
    }
    ExecutionState state;
    for (std::size_t a = 0; a < actions.size(); ++a) {
      switch (owner[a]) {
        case 0: state.executed.push_back(actions[a]); break;
        case 1: state.in_progress.push_back(actions[a]); break;
        case 2: state.waiting.push_back(actions[a]); break;
        default: throw MalformedResponse("completion estimation: action '" + actions[a] + "' not assigned");
      }
    }
    return state;
  }
  throw MalformedResponse("completion estimation: Prediction field lacks the three action lists");
}

ThoughtPrediction parse_prediction(std::string_view raw) {
  const auto labels = prediction_labels(raw);
  if (labels.empty()) throw MalformedResponse("no Prediction field");
  const std::size_t at = labels.back();
  std::string error;
  auto value = read_prediction_value(after_label(raw, at, 10), &error);
  if (!value) throw MalformedResponse(error);
  return {strip_thought_label(raw.substr(0, at)), *value};
}

Prediction parse_decision_test(std::string_view raw, std::span<const Prediction> candidates) {
  const Prediction p = parse_prediction(raw).prediction;
  if (std::find(candidates.begin(), candidates.end(), p) == candidates.end())
    throw MalformedResponse("decision testing picked '" + p.str() + "', not a candidate");
  return p;
}

std::string parse_fused_thought(std::string_view raw) {
  std::string_view body = raw;
  const auto at = text::ifind(raw, "fused thought");
  if (at != std::string_view::npos) body = after_label(raw, at, 13);
  std::string out = text::collapse_spaces(body);
  if (out.empty()) throw MalformedResponse("thought fusion: empty fused thought");
  return out;
}

std::vector<std::string> parse_object_tags(std::string_view raw) {
  std::vector<std::string> tags;
  std::string_view body = raw;
  const auto at = text::ifind(raw, "tags:");
  if (at != std::string_view::npos) body = raw.substr(at + 5);
  std::size_t begin = 0;
  while (begin <= body.size()) {
    std::size_t end = body.find_first_of(",\n;", begin);
    if (end == std::string_view::npos) end = body.size();
    std::string tag = text::collapse_spaces(text::strip_list_marker(body.substr(begin, end - begin)));
    while (!tag.empty() && tag.back() == '.') tag.pop_back();
    const std::string key = text::normalize(tag);
    if (!key.empty() && key != "none" && std::find(tags.begin(), tags.end(), tag) == tags.end())
      tags.push_back(tag);
    begin = end + 1;
  }
  return tags;
}

std::string parse_trajectory_summary(std::string_view raw) {
  std::string out(text::trim(raw));
  if (out.empty()) throw MalformedResponse("trajectory summary: empty reply");
  return out;
}

std::string format_trajectory(std::span<const TrajectoryStep> history) {
  std::string out;
  for (const auto& step : history) {
    if (!out.empty()) out += '\n';
    out += fmt::format("[Step {}] Observation: {} Thought: {}", step.index, step.observation_summary, step.thought);
  }
  return out;
}

}  // namespace discussnav
