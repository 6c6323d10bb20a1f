#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace discussnav {

enum class LandmarkKind { room, object, color_qualified, infrastructure, other };

inline constexpr LandmarkKind kAllLandmarkKinds[] = {
    LandmarkKind::room, LandmarkKind::object, LandmarkKind::color_qualified,
    LandmarkKind::infrastructure, LandmarkKind::other};

std::string_view to_string(LandmarkKind kind);
/// Accepts the canonical names plus a few spellings ("color", "colour", "scene").
std::optional<LandmarkKind> parse_landmark_kind(std::string_view text);

struct Landmark {
  std::string phrase;
  LandmarkKind kind = LandmarkKind::other;

  friend bool operator==(const Landmark&, const Landmark&) = default;
};

namespace synthetic {

// Vocabulary and clause grammar shared by the world generator and the oracle
// backend. An instruction is a sequence of sentences "<Verb> the <landmark>."
// closed by "Stop.".

std::span<const std::string_view> rooms();
std::span<const std::string_view> objects();
std::span<const std::string_view> colors();
std::span<const std::string_view> infrastructure();
std::span<const std::string_view> verbs();

/// Kind of a landmark phrase by vocabulary lookup ("the red carpet" -> color_qualified).
LandmarkKind classify(std::string_view phrase);

/// Action phrases of a grammar instruction, lower-cased, without trailing period.
std::vector<std::string> decompose(std::string_view instruction);

/// Landmarks of a grammar instruction, phrases verbatim from the instruction.
std::vector<Landmark> landmarks(std::string_view instruction);

}  // namespace synthetic
}  // namespace discussnav
