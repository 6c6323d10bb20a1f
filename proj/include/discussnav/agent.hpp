#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "discussnav/backend.hpp"
#include "discussnav/environment.hpp"
#include "discussnav/parsers.hpp"
#include "discussnav/roster.hpp"
#include "discussnav/types.hpp"

namespace discussnav {

struct AgentConfig {
  SamplingProfile decision_sampling = kDecisionSampling;
  int max_steps = 15;
  std::set<ExpertGroup> ablation;
  /// Re-asks of the same expert after a malformed reply.
  int retry_limit = 2;
  RetryPolicy transport_retry;
  /// Scene/object queries in flight at once during perception (1 = sequential).
  int perception_concurrency = 1;
  double success_threshold = kDefaultSuccessThreshold;

  bool enabled(ExpertGroup g) const { return !ablation.contains(g); }
  void validate() const;
};

struct SceneAnswer {
  std::string question;
  std::string answer;
};

struct SectorPerception {
  std::vector<SceneAnswer> scene_answers;
  std::vector<std::string> object_tags;
  bool available = true;
  /// Raw observation text, used when the vision experts are ablated.
  std::string raw_text;
};

struct PerceptionBundle {
  std::array<SectorPerception, kSectorCount> sectors;
};

struct DecisionContext {
  std::string instruction;
  ViewpointId viewpoint;
  int step = 1;
  InstructionAnalysis analysis;
  std::string trajectory;  // formatted history
  std::optional<ExecutionState> execution_state;
  PerceptionBundle perception;
};

struct Decision {
  Prediction final_prediction = Prediction::stop();
  std::vector<ThoughtPrediction> samples;
  std::vector<FusedGroup> groups;
  bool unanimous = false;
  bool fallback = false;  // plurality rule was used instead of the tester
};

struct MoveOutcome {
  bool terminal = false;
  ViewpointId next;
  bool snapped = false;
  int moved_sector = -1;
  bool forced_stop = false;
};

enum class CallOutcome { ok, malformed, backend_error };
std::string_view to_string(CallOutcome outcome);

/// One expert (or navigator) invocation.
struct CallRecord {
  int seq = 0;
  int step = 0;  // 0 = instruction analysis
  RoleId role = RoleId::navigator;
  std::string digest;
  CallOutcome outcome = CallOutcome::ok;
  int sector = -1;                        // perception calls only
  std::vector<std::string> predictions;   // navigator calls only
  std::string note;
};

using CallLog = std::vector<CallRecord>;

std::string call_record_json(const CallRecord& record);
CallRecord parse_call_record(const std::string& line);

/// Checks the per-step discussion order from a call log alone: perception, then
/// completion estimation, then decision sampling, then fusion/testing only after
/// a non-unanimous sample. Returns a description of the first violation.
std::optional<std::string> check_discussion_order(const CallLog& log);

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  TrajectoryStep step;
  ViewpointId moved_to;  // empty when the episode ended at this step
  bool snapped = false;
  bool forced_stop = false;
  bool fallback = false;
};

struct EpisodeRun {
  std::vector<StepRecord> steps;
  std::vector<ViewpointId> visited;
  MetricsReport metrics;
  CallLog calls;
  std::optional<std::string> error;
  bool stopped = false;  // ended by STOP rather than the step cap
};

/// JSON line per step plus the rendered "[Step t] ..." block.
std::string trajectory_log(const EpisodeRun& run);
std::string call_log_jsonl(const CallLog& log);

/// The navigation agent. One instance drives one episode at a time; the call log
/// accumulates every expert invocation.
class Agent {
 public:
  Agent(const ExpertRoster& roster, Backend& backend, const EnvGraph& world, AgentConfig config = {});

  InstructionAnalysis analyze_instruction(const std::string& instruction);
  PerceptionBundle perceive(const ViewpointId& viewpoint, std::span<const Landmark> landmarks);
  /// Raw per-sector observation text with no expert calls (vision ablation).
  PerceptionBundle raw_perception(const ViewpointId& viewpoint) const;
  ExecutionState estimate_completion(const InstructionAnalysis& analysis, std::span<const TrajectoryStep> history,
                                     const std::string& instruction = {}, const ViewpointId& viewpoint = {},
                                     const std::optional<ExecutionState>& previous = std::nullopt);
  Decision decide(const DecisionContext& context);
  MoveOutcome execute(Prediction prediction, const ViewpointId& at);

  EpisodeRun run_episode(const Episode& episode);

  const CallLog& calls() const { return calls_; }
  void set_step(int step) { step_ = step; }

  /// Renders the navigator prompt for a context (exposed for prompt tests).
  std::vector<Message> decision_prompt(const DecisionContext& context) const;

 private:
  /// Asks an expert until `parse` succeeds, at most retry_limit + 1 times.
  /// Every attempt is appended to `sink`; nullopt when all attempts failed.
  template <typename Parse>
  auto ask(RoleId role, const Slots& slots, Parse parse, CallLog& sink, int sector = -1)
      -> std::optional<decltype(parse(std::string()))>;

  CompletionRequest request_for(RoleId role, const Slots& slots, SamplingProfile sampling) const;
  void append(CallLog& sink, CallRecord record) const;
  SectorPerception perceive_sector(const ViewpointId& viewpoint, int sector, std::span<const LandmarkKind> kinds,
                                   CallLog& sink);

  std::string perception_text(const PerceptionBundle& bundle) const;
  std::string observation_summary(const PerceptionBundle& bundle, const MoveOutcome& move) const;

  const ExpertRoster& roster_;
  Backend& backend_;
  const EnvGraph& world_;
  AgentConfig config_;
  CallLog calls_;
  int step_ = 0;
};

/// Plurality over the samples; ties go to the lowest sector with STOP losing.
Prediction plurality_vote(std::span<const ThoughtPrediction> samples);
/// Plurality over the samples; ties go to the earliest-sampled prediction.
Prediction plurality_first_sampled(std::span<const ThoughtPrediction> samples);

/// Groups samples by prediction in order of first appearance.
std::vector<std::pair<Prediction, std::vector<std::string>>> group_samples(std::span<const ThoughtPrediction> samples);

}  // namespace discussnav
