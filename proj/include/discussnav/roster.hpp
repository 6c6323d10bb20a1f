#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "discussnav/landmarks.hpp"

namespace discussnav {

/// The eight domain experts plus the navigator (the agent's own decision prompt).
enum class RoleId {
  action_decomposition,
  landmark_extraction,
  scene_observation,
  object_detection,
  trajectory_summary,
  completion_estimation,
  thought_fusion,
  decision_testing,
  navigator,
};

inline constexpr std::array<RoleId, 8> kExpertRoles = {
    RoleId::action_decomposition, RoleId::landmark_extraction, RoleId::scene_observation,
    RoleId::object_detection,     RoleId::trajectory_summary,  RoleId::completion_estimation,
    RoleId::thought_fusion,       RoleId::decision_testing};

inline constexpr std::array<RoleId, 9> kAllRoles = {
    RoleId::action_decomposition, RoleId::landmark_extraction,   RoleId::scene_observation,
    RoleId::object_detection,     RoleId::trajectory_summary,    RoleId::completion_estimation,
    RoleId::thought_fusion,       RoleId::decision_testing,      RoleId::navigator};

std::string_view to_string(RoleId role);
std::optional<RoleId> parse_role(std::string_view name);

/// Expert groups that can be ablated as a unit.
enum class ExpertGroup { instruction_analysis, vision_perception, completion_estimation, decision_testing };

inline constexpr std::array<ExpertGroup, 4> kExpertGroups = {
    ExpertGroup::instruction_analysis, ExpertGroup::vision_perception,
    ExpertGroup::completion_estimation, ExpertGroup::decision_testing};

std::string_view to_string(ExpertGroup group);
std::optional<ExpertGroup> parse_group(std::string_view name);
std::array<RoleId, 2> roles_of(ExpertGroup group);
std::optional<ExpertGroup> group_of(RoleId role);

/// Abstract sampling request: diversity maps to temperature, breadth to n.
struct SamplingProfile {
  double diversity = 0.0;
  int breadth = 1;

  friend bool operator==(const SamplingProfile&, const SamplingProfile&) = default;
};

inline constexpr SamplingProfile kExpertSampling{0.0, 1};
inline constexpr SamplingProfile kDecisionSampling{1.0, 5};

enum class Speaker { system, user, assistant };
std::string_view to_string(Speaker speaker);

struct Message {
  Speaker speaker = Speaker::user;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

using Slots = std::map<std::string, std::string, std::less<>>;

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replaces every `{name}` placeholder in one pass. Names may contain spaces
/// ("direction id"). `{{` and `}}` produce literal braces. Braced text that is
/// not a valid name is left as is. Throws TemplateError naming a missing slot.
std::string fill_slots(std::string_view tmpl, const Slots& slots);

/// A prompt file split into named sections ("@role", "@task", "@question", ...).
class PromptTemplate {
 public:
  static PromptTemplate parse(std::string_view source);

  bool has(std::string_view section) const { return sections_.contains(std::string(section)); }
  const std::string& section(std::string_view name) const;

 private:
  std::map<std::string, std::string> sections_;
};

/// One template per role, loaded from `<dir>/<role>.prompt`.
class PromptPack {
 public:
  static PromptPack load(const std::filesystem::path& dir);
  static PromptPack load_default();
  static PromptPack from_sources(const std::map<RoleId, std::string>& sources);

  const PromptTemplate& get(RoleId role) const;
  /// SHA-256 over the raw template files in role order.
  const std::string& checksum() const { return checksum_; }

 private:
  std::map<RoleId, PromptTemplate> templates_;
  std::string checksum_;
};

struct ExpertRole {
  RoleId id;
  std::string role_text;
  std::string task_text;
  SamplingProfile sampling;
};

class ExpertRoster {
 public:
  explicit ExpertRoster(PromptPack pack);

  std::span<const ExpertRole> experts() const { return experts_; }
  const ExpertRole& expert(RoleId id) const;

  /// System message = role text + task text; user message = filled question.
  std::vector<Message> render_prompt(RoleId role, const Slots& slots) const;
  /// Renders an auxiliary section of a role's template.
  std::string render_fragment(RoleId role, std::string_view section, const Slots& slots) const;

  const std::string& checksum() const { return pack_.checksum(); }

 private:
  PromptPack pack_;
  std::vector<ExpertRole> experts_;
};

/// Landmark-type-conditioned scene question for one direction.
std::string scene_query_for(LandmarkKind kind, int sector);

}  // namespace discussnav
