#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "discussnav/types.hpp"

// Strict readers for expert replies. Every parser either returns a value or
// throws MalformedResponse; no other exception escapes.
namespace discussnav {

class MalformedResponse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> parse_action_decomposition(std::string_view raw);

struct LandmarkReply {
  std::vector<Landmark> landmarks;
  std::optional<std::vector<std::string>> corrected_actions;
};

/// Requires a "Landmarks:" section; an optional "Corrected actions:" section
/// replaces the prior sequence when it is a reordering that differs from it.
LandmarkReply parse_landmark_extraction(std::string_view raw,
                                        const std::vector<std::string>& prior_actions);

/// Three labeled lists after the last "Prediction" label, matched against the
/// decomposed actions by normalized text. Lists come back in action order.
ExecutionState parse_execution_state(std::string_view raw, const std::vector<std::string>& actions);

/// Thought is the text before the last "Prediction" label.
ThoughtPrediction parse_prediction(std::string_view raw);

Prediction parse_decision_test(std::string_view raw, std::span<const Prediction> candidates);

/// Strips an optional "Fused thought:" label.
std::string parse_fused_thought(std::string_view raw);

/// Comma or line separated tag list; may be empty.
std::vector<std::string> parse_object_tags(std::string_view raw);

/// Non-empty summary text.
std::string parse_trajectory_summary(std::string_view raw);

/// One "[Step t] Observation: ... Thought: ..." line per step.
std::string format_trajectory(std::span<const TrajectoryStep> history);

}  // namespace discussnav
