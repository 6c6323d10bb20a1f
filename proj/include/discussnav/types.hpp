#pragma once

#include <optional>
#include <string>
#include <vector>

#include "discussnav/environment.hpp"
#include "discussnav/landmarks.hpp"

namespace discussnav {

/// A movement decision: one of the 12 sectors, or STOP.
class Prediction {
 public:
  static Prediction stop() { return Prediction(-1); }
  static Prediction sector(int s);  // throws std::out_of_range unless 0 <= s < 12

  bool is_stop() const { return value_ < 0; }
  int sector_id() const { return value_; }  // -1 for STOP
  std::string str() const { return is_stop() ? "stop" : std::to_string(value_); }

  friend bool operator==(Prediction, Prediction) = default;
  /// Sectors ascending, STOP last.
  friend bool operator<(Prediction a, Prediction b) {
    return (a.is_stop() ? kSectorCount : a.value_) < (b.is_stop() ? kSectorCount : b.value_);
  }

 private:
  explicit Prediction(int v) : value_(v) {}
  int value_;
};

struct InstructionAnalysis {
  std::vector<std::string> actions;
  std::vector<Landmark> landmarks;
  bool corrected = false;
};

struct ExecutionState {
  std::vector<std::string> executed;
  std::vector<std::string> in_progress;
  std::vector<std::string> waiting;

  static ExecutionState all_waiting(const std::vector<std::string>& actions) { return {{}, {}, actions}; }
  friend bool operator==(const ExecutionState&, const ExecutionState&) = default;
};

struct ThoughtPrediction {
  std::string thought;
  Prediction prediction = Prediction::stop();
};

struct FusedGroup {
  Prediction prediction = Prediction::stop();
  std::string fused_thought;
  int support = 0;
};

struct TrajectoryStep {
  int index = 0;  // 1-based
  ViewpointId viewpoint;
  std::string observation_summary;
  std::string thought;
  Prediction prediction = Prediction::stop();
  std::optional<ExecutionState> execution_state;
};

}  // namespace discussnav
