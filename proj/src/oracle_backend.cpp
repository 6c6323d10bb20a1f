#include "discussnav/oracle_backend.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "discussnav/landmarks.hpp"
#include "discussnav/text.hpp"

namespace discussnav {
namespace {

std::string user_text(const CompletionRequest& request) {
  std::string out;
  for (const auto& m : request.messages)
    if (m.speaker == Speaker::user) out += m.content + "\n";
  return out;
}

std::optional<std::string> line_value(std::string_view text, std::string_view prefix) {
  for (auto line : text::split_lines(text)) {
    line = text::trim(line);
    if (line.starts_with(prefix)) return std::string(text::trim(line.substr(prefix.size())));
  }
  return std::nullopt;
}

// Text between a line equal to `open` and the next line equal to `close`.
std::string block(std::string_view text, std::string_view open, std::string_view close) {
  std::string out;
  bool inside = false;
  for (auto line : text::split_lines(text)) {
    if (!inside) {
      inside = text::trim(line) == open;
      continue;
    }
    if (text::trim(line) == close) break;
    out += std::string(line) + "\n";
  }
  return out;
}

std::pair<ViewpointId, int> observation_key(std::string_view text) {
  auto value = line_value(text, "Observation key: viewpoint ");
  if (!value) throw BackendError(BackendErrorKind::invalid_request, "oracle: request lacks an observation key");
  const auto comma = value->find(", direction ");
  if (comma == std::string::npos) throw BackendError(BackendErrorKind::invalid_request, "oracle: bad observation key");
  auto sector = text::leading_int(std::string_view(*value).substr(comma + 12));
  if (!sector) throw BackendError(BackendErrorKind::invalid_request, "oracle: bad direction in observation key");
  return {value->substr(0, comma), *sector};
}

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += fmt::format("{}. {}\n", i + 1, items[i]);
  return out;
}

std::string dashed(const std::vector<std::string>& items) {
  if (items.empty()) return "none\n";
  std::string out;
  for (const auto& i : items) out += "- " + i + "\n";
  return out;
}

}  // namespace

OracleBackend::OracleBackend(const EnvGraph& world, std::vector<Episode> episodes)
    : world_(world), episodes_(std::move(episodes)) {}

const Episode& OracleBackend::episode_for(const std::string& text) const {
  const Episode* best = nullptr;
  for (const auto& e : episodes_)
    if (text.find(e.instruction) != std::string::npos && (!best || e.instruction.size() > best->instruction.size()))
      best = &e;
  if (!best) throw BackendError(BackendErrorKind::unknown_episode, "oracle: request names no known episode");
  return *best;
}

Prediction OracleBackend::next_move(const Episode& episode, const ViewpointId& at) const {
  if (at == episode.goal) return Prediction::stop();
  ViewpointId next;
  const auto& ref = episode.reference_path;
  auto it = std::find(ref.begin(), ref.end(), at);
  if (it != ref.end() && it + 1 != ref.end()) {
    next = *(it + 1);
  } else {
    auto path = shortest_path(world_, at, episode.goal);
    if (!path || path->size() < 2) return Prediction::stop();
    next = (*path)[1];
  }
  double heading = 0.0;
  double best = kUnreachable;
  for (const Edge* e : world_.edges_from(at))
    if (e->to == next && e->distance < best) {
      best = e->distance;
      heading = e->heading;
    }
  return Prediction::sector(sector_of(heading));
}

std::string OracleBackend::answer(const CompletionRequest& request) const {
  const std::string user = user_text(request);
  switch (request.role) {
    case RoleId::action_decomposition:
      return numbered(synthetic::decompose(episode_for(user).instruction));

    case RoleId::landmark_extraction: {
      const auto lms = synthetic::landmarks(episode_for(user).instruction);
      if (lms.empty()) return "Corrected actions: none\nLandmarks: none\n";
      std::string out = "Corrected actions: none\nLandmarks:\n";
      for (std::size_t i = 0; i < lms.size(); ++i)
        out += fmt::format("{}. {} ({})\n", i + 1, lms[i].phrase, to_string(lms[i].kind));
      return out;
    }

    case RoleId::scene_observation: {
      auto [vp, sector] = observation_key(user);
      const Observation* obs = world_.observation(vp, sector);
      if (!obs || obs->scene_text.empty()) return fmt::format("In direction {} I can see nothing notable.", sector);
      return fmt::format("In direction {} I can see {}.", sector, obs->scene_text);
    }

    case RoleId::object_detection: {
      auto [vp, sector] = observation_key(user);
      const Observation* obs = world_.observation(vp, sector);
      if (!obs || obs->object_tags.empty()) return "Tags: none";
      return "Tags: " + text::join(obs->object_tags, ", ");
    }

    case RoleId::trajectory_summary: {
      std::string out;
      for (auto line : text::split_lines(user))
        if (text::trim(line).starts_with("[Step")) out += std::string(text::trim(line)) + "\n";
      return out.empty() ? "No movement yet." : out;
    }

    case RoleId::completion_estimation: {
      const Episode& ep = episode_for(user);
      const auto actions = text::list_items(block(user, "Actions:", "Trajectory:"));
      if (actions.empty()) throw BackendError(BackendErrorKind::invalid_request, "oracle: no actions in request");
      const auto vp = line_value(user, "Current viewpoint:").value_or(ep.start);
      const auto& ref = ep.reference_path;
      std::size_t progress = 0;
      if (auto it = std::find(ref.begin(), ref.end(), vp); it != ref.end()) {
        progress = static_cast<std::size_t>(it - ref.begin());
      } else if (auto step = line_value(user, "Current step:")) {
        progress = static_cast<std::size_t>(std::max(0, text::leading_int(*step).value_or(1) - 1));
      }
      progress = std::min(progress, actions.size() - 1);
      std::vector<std::string> executed(actions.begin(), actions.begin() + static_cast<long>(progress));
      std::vector<std::string> in_progress{actions[progress]};
      std::vector<std::string> waiting(actions.begin() + static_cast<long>(progress) + 1, actions.end());
      return fmt::format(
          "Thought: {} of the reference hops are done.\nPrediction:\nExecuted Actions:\n{}In-progress Actions:\n{}"
          "Actions Waiting to be Executed:\n{}",
          progress, dashed(executed), dashed(in_progress), dashed(waiting));
    }

    case RoleId::thought_fusion: {
      const auto thoughts = text::list_items(block(user, "Thoughts:", ""));
      return "Fused thought: " + (thoughts.empty() ? std::string("continue along the route") : thoughts.front());
    }

    case RoleId::decision_testing: {
      const Episode& ep = episode_for(user);
      const auto vp = line_value(user, "Current viewpoint:");
      if (!vp) throw BackendError(BackendErrorKind::invalid_request, "oracle: no current viewpoint");
      const Prediction truth = next_move(ep, *vp);
      std::vector<std::string> candidates;
      for (auto line : text::split_lines(block(user, "Candidates:", "")))
        if (auto v = line_value(line, "Prediction:")) candidates.push_back(*v);
      std::string pick = candidates.empty() ? truth.str() : candidates.front();
      for (const auto& c : candidates)
        if (text::lower(c) == truth.str()) pick = c;
      return fmt::format("Thought: {} agrees with the route.\nPrediction: {}", pick, pick);
    }

    case RoleId::navigator: {
      const Episode& ep = episode_for(user);
      const auto vp = line_value(user, "Current viewpoint:");
      if (!vp) throw BackendError(BackendErrorKind::invalid_request, "oracle: no current viewpoint");
      const Prediction p = next_move(ep, *vp);
      if (p.is_stop()) return "Thought: The goal is reached and every action is done.\nPrediction: stop";
      return fmt::format("Thought: The next landmark lies in direction {}.\nPrediction: {}", p.sector_id(),
                         p.sector_id());
    }
  }
  throw BackendError(BackendErrorKind::invalid_request, "oracle: unsupported role");
}

CompletionResult OracleBackend::complete(const CompletionRequest& request) {
  CompletionResult result;
  result.backend_id = id();
  const std::string reply = answer(request);
  result.completions.assign(static_cast<std::size_t>(request.sampling.breadth), reply);
  return result;
}

}  // namespace discussnav
