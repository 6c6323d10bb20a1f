#include "discussnav/roster.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "discussnav/digest.hpp"
#include "discussnav/text.hpp"

#ifndef DISCUSSNAV_DEFAULT_PROMPT_DIR
#define DISCUSSNAV_DEFAULT_PROMPT_DIR "prompts"
#endif

namespace discussnav {

std::string_view to_string(RoleId role) {
  switch (role) {
    case RoleId::action_decomposition: return "action_decomposition";
    case RoleId::landmark_extraction: return "landmark_extraction";
    case RoleId::scene_observation: return "scene_observation";
    case RoleId::object_detection: return "object_detection";
    case RoleId::trajectory_summary: return "trajectory_summary";
    case RoleId::completion_estimation: return "completion_estimation";
    case RoleId::thought_fusion: return "thought_fusion";
    case RoleId::decision_testing: return "decision_testing";
    case RoleId::navigator: return "navigator";
  }
  return "navigator";
}

std::optional<RoleId> parse_role(std::string_view name) {
  for (RoleId r : kAllRoles)
    if (to_string(r) == name) return r;
  return std::nullopt;
}

std::string_view to_string(ExpertGroup group) {
  switch (group) {
    case ExpertGroup::instruction_analysis: return "instruction_analysis";
    case ExpertGroup::vision_perception: return "vision_perception";
    case ExpertGroup::completion_estimation: return "completion_estimation";
    case ExpertGroup::decision_testing: return "decision_testing";
  }
  return "decision_testing";
}

std::optional<ExpertGroup> parse_group(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');
  for (ExpertGroup g : kExpertGroups)
    if (to_string(g) == key) return g;
  return std::nullopt;
}

std::array<RoleId, 2> roles_of(ExpertGroup group) {
  switch (group) {
    case ExpertGroup::instruction_analysis:
      return {RoleId::action_decomposition, RoleId::landmark_extraction};
    case ExpertGroup::vision_perception:
      return {RoleId::scene_observation, RoleId::object_detection};
    case ExpertGroup::completion_estimation:
      return {RoleId::trajectory_summary, RoleId::completion_estimation};
    case ExpertGroup::decision_testing:
      return {RoleId::thought_fusion, RoleId::decision_testing};
  }
  return {RoleId::thought_fusion, RoleId::decision_testing};
}

std::optional<ExpertGroup> group_of(RoleId role) {
  for (ExpertGroup g : kExpertGroups)
    for (RoleId r : roles_of(g))
      if (r == role) return g;
  return std::nullopt;
}

std::string_view to_string(Speaker speaker) {
  switch (speaker) {
    case Speaker::system: return "system";
    case Speaker::user: return "user";
    case Speaker::assistant: return "assistant";
  }
  return "user";
}

namespace {

bool valid_slot_name(std::string_view name) {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name.front())) || name.front() == '_'))
    return false;
  if (name.back() == ' ') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ' ';
  });
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot open prompt file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string fill_slots(std::string_view tmpl, const Slots& slots) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    const char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out.push_back('{');
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out.push_back('}');
      i += 2;
      continue;
    }
    if (c == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        if (valid_slot_name(name)) {
          auto it = slots.find(name);
          if (it == slots.end()) throw TemplateError(fmt::format("missing slot '{}'", name));
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

PromptTemplate PromptTemplate::parse(std::string_view source) {
  PromptTemplate t;
  std::string current;
  std::vector<std::string_view> lines;
  auto flush = [&] {
    if (current.empty()) return;
    while (!lines.empty() && text::trim(lines.back()).empty()) lines.pop_back();
    std::size_t first = 0;
    while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
    std::string body;
    for (std::size_t i = first; i < lines.size(); ++i) {
      if (i > first) body += '\n';
      std::string_view l = lines[i];
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      body += l;
    }
    if (!t.sections_.emplace(current, std::move(body)).second)
      throw TemplateError("duplicate section '@" + current + "'");
    lines.clear();
  };
  for (std::string_view line : text::split_lines(source)) {
    if (line.starts_with('@')) {
      flush();
      current = std::string(text::trim(line.substr(1)));
      if (current.empty()) throw TemplateError("empty section name");
      continue;
    }
    if (current.empty()) continue;  // header comments before the first section
    lines.push_back(line);
  }
  flush();
  return t;
}

const std::string& PromptTemplate::section(std::string_view name) const {
  auto it = sections_.find(std::string(name));
  if (it == sections_.end()) throw TemplateError(fmt::format("template has no '@{}' section", name));
  return it->second;
}

PromptPack PromptPack::from_sources(const std::map<RoleId, std::string>& sources) {
  PromptPack pack;
  std::string all;
  for (RoleId role : kAllRoles) {
    auto it = sources.find(role);
    if (it == sources.end())
      throw TemplateError(fmt::format("prompt pack lacks a template for '{}'", to_string(role)));
    PromptTemplate t = PromptTemplate::parse(it->second);
    for (const char* required : {"role", "task", "question"})
      if (!t.has(required))
        throw TemplateError(fmt::format("template '{}' has no '@{}' section", to_string(role), required));
    pack.templates_.emplace(role, std::move(t));
    all += to_string(role);
    all.push_back('\0');
    all += it->second;
    all.push_back('\0');
  }
  pack.checksum_ = sha256_hex(all);
  return pack;
}

PromptPack PromptPack::load(const std::filesystem::path& dir) {
  std::map<RoleId, std::string> sources;
  for (RoleId role : kAllRoles)
    sources[role] = read_text(dir / (std::string(to_string(role)) + ".prompt"));
  return from_sources(sources);
}

PromptPack PromptPack::load_default() {
  if (const char* env = std::getenv("DISCUSSNAV_PROMPTS")) return load(env);
  return load(DISCUSSNAV_DEFAULT_PROMPT_DIR);
}

const PromptTemplate& PromptPack::get(RoleId role) const {
  auto it = templates_.find(role);
  if (it == templates_.end())
    throw TemplateError(fmt::format("no template for '{}'", to_string(role)));
  return it->second;
}

ExpertRoster::ExpertRoster(PromptPack pack) : pack_(std::move(pack)) {
  for (RoleId id : kExpertRoles) {
    const auto& t = pack_.get(id);
    experts_.push_back({id, t.section("role"), t.section("task"), kExpertSampling});
  }
}

const ExpertRole& ExpertRoster::expert(RoleId id) const {
  auto it = std::find_if(experts_.begin(), experts_.end(), [&](const ExpertRole& r) { return r.id == id; });
  if (it == experts_.end())
    throw std::out_of_range(fmt::format("'{}' is not an expert role", to_string(id)));
  return *it;
}

std::vector<Message> ExpertRoster::render_prompt(RoleId role, const Slots& slots) const {
  const auto& t = pack_.get(role);
  return {{Speaker::system, t.section("role") + "\n\n" + t.section("task")},
          {Speaker::user, fill_slots(t.section("question"), slots)}};
}

std::string ExpertRoster::render_fragment(RoleId role, std::string_view section,
                                          const Slots& slots) const {
  return fill_slots(pack_.get(role).section(section), slots);
}

std::string scene_query_for(LandmarkKind kind, int sector) {
  switch (kind) {
    case LandmarkKind::room:
      return fmt::format("What room can you see in the current direction {}", sector);
    case LandmarkKind::color_qualified:
      return fmt::format("What color of objects can you see in the current direction {}", sector);
    default:
      return fmt::format("What objects can you see in the current direction {}", sector);
  }
}

}  // namespace discussnav
