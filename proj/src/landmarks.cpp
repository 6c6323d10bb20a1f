#include "discussnav/landmarks.hpp"

#include <algorithm>
#include <array>

#include "discussnav/text.hpp"

namespace discussnav {

std::string_view to_string(LandmarkKind kind) {
  switch (kind) {
    case LandmarkKind::room: return "room";
    case LandmarkKind::object: return "object";
    case LandmarkKind::color_qualified: return "color_qualified";
    case LandmarkKind::infrastructure: return "infrastructure";
    case LandmarkKind::other: return "other";
  }
  return "other";
}

std::optional<LandmarkKind> parse_landmark_kind(std::string_view text) {
  const std::string key = text::normalize(text);
  if (key == "room" || key == "scene" || key == "room type") return LandmarkKind::room;
  if (key == "object") return LandmarkKind::object;
  if (key == "color qualified" || key == "colorqualified" || key == "color" ||
      key == "colour" || key == "colored object" || key == "color object")
    return LandmarkKind::color_qualified;
  if (key == "infrastructure") return LandmarkKind::infrastructure;
  if (key == "other") return LandmarkKind::other;
  return std::nullopt;
}

namespace synthetic {
namespace {

constexpr std::array<std::string_view, 8> kRooms = {
    "kitchen", "bedroom", "bathroom", "living room", "dining room", "office", "laundry room",
    "hallway"};
constexpr std::array<std::string_view, 12> kObjects = {
    "sofa", "table", "lamp", "bookshelf", "piano", "armchair", "fireplace", "painting",
    "plant", "mirror", "cabinet", "television"};
constexpr std::array<std::string_view, 6> kColors = {"red", "blue", "green",
                                                     "white", "black", "yellow"};
constexpr std::array<std::string_view, 6> kInfrastructure = {
    "stairs", "doorway", "elevator", "railing", "archway", "hallway door"};
constexpr std::array<std::string_view, 5> kVerbs = {"Walk toward", "Go past", "Head to",
                                                    "Continue to", "Move toward"};

bool contains(std::span<const std::string_view> words, std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

std::string strip_article(std::string_view phrase) {
  std::string p = text::normalize(phrase);
  if (p.starts_with("the ")) p.erase(0, 4);
  return p;
}

std::vector<std::string_view> sentences(std::string_view instruction) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (begin < instruction.size()) {
    std::size_t end = instruction.find('.', begin);
    if (end == std::string_view::npos) end = instruction.size();
    std::string_view s = text::trim(instruction.substr(begin, end - begin));
    if (!s.empty()) out.push_back(s);
    begin = end + 1;
  }
  return out;
}

}  // namespace

std::span<const std::string_view> rooms() { return kRooms; }
std::span<const std::string_view> objects() { return kObjects; }
std::span<const std::string_view> colors() { return kColors; }
std::span<const std::string_view> infrastructure() { return kInfrastructure; }
std::span<const std::string_view> verbs() { return kVerbs; }

LandmarkKind classify(std::string_view phrase) {
  const std::string p = strip_article(phrase);
  if (contains(kRooms, p)) return LandmarkKind::room;
  if (contains(kInfrastructure, p)) return LandmarkKind::infrastructure;
  if (contains(kObjects, p)) return LandmarkKind::object;
  const auto space = p.find(' ');
  if (space != std::string::npos && contains(kColors, std::string_view(p).substr(0, space)))
    return LandmarkKind::color_qualified;
  return LandmarkKind::other;
}

std::vector<std::string> decompose(std::string_view instruction) {
  std::vector<std::string> actions;
  for (auto s : sentences(instruction)) actions.push_back(text::lower(text::collapse_spaces(s)));
  return actions;
}

std::vector<Landmark> landmarks(std::string_view instruction) {
  std::vector<Landmark> out;
  for (auto s : sentences(instruction)) {
    const auto at = s.find("the ");
    if (at == std::string_view::npos) continue;
    std::string_view phrase = s.substr(at);
    out.push_back({std::string(phrase), classify(phrase)});
  }
  return out;
}

}  // namespace synthetic
}  // namespace discussnav
