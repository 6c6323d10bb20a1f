#include "discussnav/agent.hpp"

#include <algorithm>
#include <future>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "discussnav/text.hpp"

namespace discussnav {

using nlohmann::json;

void AgentConfig::validate() const {
  if (decision_sampling.breadth < 1) throw std::invalid_argument("decision breadth must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (retry_limit < 0) throw std::invalid_argument("retry_limit must be >= 0");
  if (perception_concurrency < 1) throw std::invalid_argument("perception_concurrency must be >= 1");
}

std::string_view to_string(CallOutcome outcome) {
  switch (outcome) {
    case CallOutcome::ok: return "ok";
    case CallOutcome::malformed: return "malformed";
    case CallOutcome::backend_error: return "backend_error";
  }
  return "ok";
}

std::string call_record_json(const CallRecord& r) {
  json j{{"seq", r.seq},
         {"step", r.step},
         {"role", to_string(r.role)},
         {"digest", r.digest},
         {"outcome", to_string(r.outcome)}};
  if (r.sector >= 0) j["sector"] = r.sector;
  if (r.role == RoleId::navigator) j["predictions"] = r.predictions;
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

CallRecord parse_call_record(const std::string& line) {
  json j = json::parse(line);
  CallRecord r;
  r.seq = j.at("seq").get<int>();
  r.step = j.at("step").get<int>();
  auto role = parse_role(j.at("role").get<std::string>());
  if (!role) throw std::invalid_argument("call record with unknown role");
  r.role = *role;
  r.digest = j.value("digest", "");
  const auto outcome = j.value("outcome", "ok");
  r.outcome = outcome == "malformed" ? CallOutcome::malformed
              : outcome == "backend_error" ? CallOutcome::backend_error
                                           : CallOutcome::ok;
  r.sector = j.value("sector", -1);
  r.predictions = j.value("predictions", std::vector<std::string>{});
  r.note = j.value("note", "");
  return r;
}

std::string call_log_jsonl(const CallLog& log) {
  std::string out;
  for (const auto& r : log) out += call_record_json(r) + "\n";
  return out;
}

namespace {

int phase_of(RoleId role) {
  switch (role) {
    case RoleId::action_decomposition:
    case RoleId::landmark_extraction: return 0;
    case RoleId::scene_observation:
    case RoleId::object_detection: return 1;
    case RoleId::trajectory_summary:
    case RoleId::completion_estimation: return 2;
    case RoleId::navigator: return 3;
    case RoleId::thought_fusion:
    case RoleId::decision_testing: return 4;
  }
  return 3;
}

bool unanimous(const std::vector<std::string>& predictions) {
  return !predictions.empty() &&
         std::all_of(predictions.begin(), predictions.end(), [&](const auto& p) { return p == predictions.front(); });
}

}  // namespace

std::optional<std::string> check_discussion_order(const CallLog& log) {
  int step = 0;
  int phase = 0;
  const CallRecord* sampling = nullptr;
  for (const auto& r : log) {
    if (r.step < step) return fmt::format("call {} goes back to step {} after step {}", r.seq, r.step, step);
    if (r.step > step) {
      step = r.step;
      phase = 0;
      sampling = nullptr;
    }
    const int p = phase_of(r.role);
    if ((r.step == 0) != (p == 0))
      return fmt::format("call {}: {} at step {}", r.seq, to_string(r.role), r.step);
    if (p < phase)
      return fmt::format("call {}: {} after a later discussion phase in step {}", r.seq, to_string(r.role), r.step);
    phase = p;
    if (r.role == RoleId::navigator && (sampling == nullptr || sampling->note != "selected")) sampling = &r;
    if (p == 4) {
      if (sampling == nullptr)
        return fmt::format("call {}: {} without decision sampling", r.seq, to_string(r.role));
      if (unanimous(sampling->predictions))
        return fmt::format("call {}: {} after unanimous samples in step {}", r.seq, to_string(r.role), r.step);
    }
  }
  return std::nullopt;
}

std::string trajectory_log(const EpisodeRun& run) {
  std::string out;
  for (const auto& s : run.steps) {
    json j{{"t", s.step.index},
           {"viewpoint", s.step.viewpoint},
           {"prediction", s.step.prediction.str()},
           {"snapped", s.snapped},
           {"forced_stop", s.forced_stop},
           {"fallback", s.fallback},
           {"moved_to", s.moved_to.empty() ? json(nullptr) : json(s.moved_to)},
           {"observation", s.step.observation_summary},
           {"thought", s.step.thought}};
    if (s.step.execution_state) {
      j["execution_state"] = {{"executed", s.step.execution_state->executed},
                              {"in_progress", s.step.execution_state->in_progress},
                              {"waiting", s.step.execution_state->waiting}};
    } else {
      j["execution_state"] = nullptr;
    }
    const TrajectoryStep one[] = {s.step};
    j["rendered"] = format_trajectory(one);
    out += j.dump() + "\n";
  }
  return out;
}

Prediction plurality_vote(std::span<const ThoughtPrediction> samples) {
  if (samples.empty()) throw DecisionError("no samples to vote on");
  std::map<Prediction, int> counts;  // ordered sectors ascending, STOP last
  for (const auto& s : samples) ++counts[s.prediction];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

Prediction plurality_first_sampled(std::span<const ThoughtPrediction> samples) {
  if (samples.empty()) throw DecisionError("no samples to vote on");
  const auto groups = group_samples(samples);
  auto best = groups.begin();
  for (auto it = groups.begin(); it != groups.end(); ++it)
    if (it->second.size() > best->second.size()) best = it;
  return best->first;
}

std::vector<std::pair<Prediction, std::vector<std::string>>> group_samples(std::span<const ThoughtPrediction> samples) {
  std::vector<std::pair<Prediction, std::vector<std::string>>> groups;
  for (const auto& s : samples) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == s.prediction; });
    if (it == groups.end())
      groups.push_back({s.prediction, {s.thought}});
    else
      it->second.push_back(s.thought);
  }
  return groups;
}

// ---------------------------------------------------------------------------

Agent::Agent(const ExpertRoster& roster, Backend& backend, const EnvGraph& world, AgentConfig config)
    : roster_(roster), backend_(backend), world_(world), config_(std::move(config)) {
  config_.validate();
}

CompletionRequest Agent::request_for(RoleId role, const Slots& slots, SamplingProfile sampling) const {
  return {role, roster_.render_prompt(role, slots), sampling};
}

void Agent::append(CallLog& sink, CallRecord record) const {
  record.seq = static_cast<int>(sink.size()) + 1;
  sink.push_back(std::move(record));
}

template <typename Parse>
auto Agent::ask(RoleId role, const Slots& slots, Parse parse, CallLog& sink, int sector)
    -> std::optional<decltype(parse(std::string()))> {
  const CompletionRequest request = request_for(role, slots, kExpertSampling);
  const std::string digest = request_digest(request);
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    CallRecord rec{0, step_, role, digest, CallOutcome::ok, sector, {}, {}};
    try {
      CompletionResult result = complete(backend_, request, config_.transport_retry);
      try {
        auto value = parse(result.completions.front());
        append(sink, std::move(rec));
        return value;
      } catch (const MalformedResponse& e) {
        rec.outcome = CallOutcome::malformed;
        rec.note = e.what();
        append(sink, std::move(rec));
        spdlog::debug("{} step {}: malformed reply ({}), attempt {}", to_string(role), step_, e.what(), attempt + 1);
      }
    } catch (const BackendError& e) {
      rec.outcome = CallOutcome::backend_error;
      rec.note = e.what();
      append(sink, std::move(rec));
      spdlog::warn("{} step {}: {}", to_string(role), step_, e.what());
      return std::nullopt;
    }
  }
  return std::nullopt;
}

InstructionAnalysis Agent::analyze_instruction(const std::string& instruction) {
  if (text::trim(instruction).empty()) throw AnalysisError("empty instruction");
  InstructionAnalysis analysis;
  auto actions = ask(RoleId::action_decomposition, {{"instruction", instruction}}, parse_action_decomposition, calls_);
  if (!actions) throw AnalysisError("action decomposition expert gave no usable reply");
  analysis.actions = std::move(*actions);

  Slots slots{{"instruction", instruction}, {"actions", text::join(analysis.actions, "\n")}};
  {
    std::vector<std::string> numbered;
    for (std::size_t i = 0; i < analysis.actions.size(); ++i)
      numbered.push_back(fmt::format("{}. {}", i + 1, analysis.actions[i]));
    slots["actions"] = text::join(numbered, "\n");
  }
  auto parse_landmarks = [&](const std::string& raw) {
    LandmarkReply reply = parse_landmark_extraction(raw, analysis.actions);
    for (auto& lm : reply.landmarks) {
      const auto at = text::ifind(instruction, lm.phrase);
      if (at == std::string::npos)
        throw MalformedResponse("landmark '" + lm.phrase + "' does not occur in the instruction");
      lm.phrase = instruction.substr(at, lm.phrase.size());
    }
    return reply;
  };
  auto reply = ask(RoleId::landmark_extraction, slots, parse_landmarks, calls_);
  if (!reply) throw AnalysisError("landmark extraction expert gave no usable reply");
  analysis.landmarks = std::move(reply->landmarks);
  if (reply->corrected_actions) {
    spdlog::info("landmark expert corrected the action order");
    analysis.actions = std::move(*reply->corrected_actions);
    analysis.corrected = true;
  }
  return analysis;
}

SectorPerception Agent::perceive_sector(const ViewpointId& viewpoint, int sector, std::span<const LandmarkKind> kinds,
                                        CallLog& sink) {
  SectorPerception out;
  const Observation* obs = world_.observation(viewpoint, sector);
  const std::string scene = obs && !obs->scene_text.empty() ? obs->scene_text : "nothing notable";
  Slots slots{{"viewpoint", viewpoint}, {"direction id", std::to_string(sector)}, {"scene", scene}};
  auto non_empty = [](const std::string& raw) {
    std::string a = text::collapse_spaces(raw);
    if (a.empty()) throw MalformedResponse("scene observation: empty reply");
    return a;
  };
  for (LandmarkKind kind : kinds) {
    Slots q = slots;
    q["query"] = scene_query_for(kind, sector);
    auto answer = ask(RoleId::scene_observation, q, non_empty, sink, sector);
    if (!answer) {
      out.available = false;
      continue;
    }
    out.scene_answers.push_back({q["query"], *answer});
  }
  auto tags = ask(RoleId::object_detection, slots, parse_object_tags, sink, sector);
  if (tags)
    out.object_tags = std::move(*tags);
  else
    out.available = false;
  if (!out.available) spdlog::warn("viewpoint {} direction {}: perception unavailable", viewpoint, sector);
  return out;
}

PerceptionBundle Agent::perceive(const ViewpointId& viewpoint, std::span<const Landmark> landmarks) {
  if (!world_.has_viewpoint(viewpoint)) throw std::out_of_range("unknown viewpoint '" + viewpoint + "'");
  std::vector<LandmarkKind> kinds;
  for (LandmarkKind k : kAllLandmarkKinds)
    if (std::any_of(landmarks.begin(), landmarks.end(), [&](const Landmark& l) { return l.kind == k; }))
      kinds.push_back(k);

  PerceptionBundle bundle;
  std::array<CallLog, kSectorCount> logs;
  if (config_.perception_concurrency <= 1) {
    for (int s = 0; s < kSectorCount; ++s) bundle.sectors[s] = perceive_sector(viewpoint, s, kinds, logs[s]);
  } else {
    for (int begin = 0; begin < kSectorCount; begin += config_.perception_concurrency) {
      const int end = std::min(kSectorCount, begin + config_.perception_concurrency);
      std::vector<std::future<SectorPerception>> pending;
      for (int s = begin; s < end; ++s)
        pending.push_back(std::async(std::launch::async,
                                     [&, s] { return perceive_sector(viewpoint, s, kinds, logs[s]); }));
      for (int s = begin; s < end; ++s) bundle.sectors[s] = pending[s - begin].get();
    }
  }
  for (auto& log : logs)
    for (auto& rec : log) append(calls_, std::move(rec));
  return bundle;
}

PerceptionBundle Agent::raw_perception(const ViewpointId& viewpoint) const {
  PerceptionBundle bundle;
  for (int s = 0; s < kSectorCount; ++s) {
    const Observation* obs = world_.observation(viewpoint, s);
    bundle.sectors[s].raw_text = obs && !obs->scene_text.empty() ? obs->scene_text : "nothing notable";
  }
  return bundle;
}

ExecutionState Agent::estimate_completion(const InstructionAnalysis& analysis, std::span<const TrajectoryStep> history,
                                          const std::string& instruction, const ViewpointId& viewpoint,
                                          const std::optional<ExecutionState>& previous) {
  const ExecutionState initial = ExecutionState::all_waiting(analysis.actions);
  if (history.empty()) return initial;

  const std::string raw = format_trajectory(history);
  auto summary = ask(RoleId::trajectory_summary, {{"trajectory", raw}}, parse_trajectory_summary, calls_);
  if (!summary) spdlog::warn("step {}: trajectory summary unavailable, using raw history", step_);

  std::vector<std::string> numbered;
  for (std::size_t i = 0; i < analysis.actions.size(); ++i)
    numbered.push_back(fmt::format("{}. {}", i + 1, analysis.actions[i]));
  Slots slots{{"instruction", instruction},
              {"viewpoint", viewpoint},
              {"step", std::to_string(step_)},
              {"actions", text::join(numbered, "\n")},
              {"trajectory", summary.value_or(raw)}};
  auto state = ask(
      RoleId::completion_estimation, slots,
      [&](const std::string& reply) { return parse_execution_state(reply, analysis.actions); }, calls_);
  if (state) return *state;
  spdlog::warn("step {}: completion estimation failed, keeping the previous state", step_);
  return previous.value_or(initial);
}

std::string Agent::perception_text(const PerceptionBundle& bundle) const {
  std::string out;
  for (int s = 0; s < kSectorCount; ++s) {
    const auto& sp = bundle.sectors[s];
    out += fmt::format("Direction {}: ", s);
    if (!sp.raw_text.empty()) {
      out += sp.raw_text;
    } else {
      std::vector<std::string> parts;
      for (const auto& a : sp.scene_answers)
        if (std::find(parts.begin(), parts.end(), a.answer) == parts.end()) parts.push_back(a.answer);
      if (!sp.object_tags.empty()) parts.push_back("objects: " + text::join(sp.object_tags, ", "));
      if (!sp.available) parts.push_back("(perception unavailable)");
      out += parts.empty() ? std::string("nothing reported") : text::join(parts, " ");
    }
    out += "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::vector<Message> Agent::decision_prompt(const DecisionContext& ctx) const {
  std::vector<std::string> numbered;
  for (std::size_t i = 0; i < ctx.analysis.actions.size(); ++i)
    numbered.push_back(fmt::format("{}. {}", i + 1, ctx.analysis.actions[i]));
  std::vector<std::string> landmarks;
  for (const auto& l : ctx.analysis.landmarks) landmarks.push_back(fmt::format("- {} ({})", l.phrase, to_string(l.kind)));

  std::string state_block;
  if (ctx.execution_state) {
    auto list = [](const std::vector<std::string>& v) { return v.empty() ? std::string("none") : text::join(v, "; "); };
    state_block = roster_.render_fragment(RoleId::navigator, "execution_state",
                                          {{"executed", list(ctx.execution_state->executed)},
                                           {"in_progress", list(ctx.execution_state->in_progress)},
                                           {"waiting", list(ctx.execution_state->waiting)}}) +
                  "\n";
  }
  return roster_.render_prompt(RoleId::navigator,
                               {{"instruction", ctx.instruction},
                                {"viewpoint", ctx.viewpoint},
                                {"step", std::to_string(ctx.step)},
                                {"actions", text::join(numbered, "\n")},
                                {"landmarks", landmarks.empty() ? std::string("none") : text::join(landmarks, "\n")},
                                {"trajectory", ctx.trajectory.empty() ? std::string("none") : ctx.trajectory},
                                {"execution_state", state_block},
                                {"perception", perception_text(ctx.perception)}});
}

Decision Agent::decide(const DecisionContext& ctx) {
  Decision d;
  const CompletionRequest request{RoleId::navigator, decision_prompt(ctx), config_.decision_sampling};
  const std::string digest = request_digest(request);

  std::optional<std::size_t> chosen;  // index into calls_
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    CallRecord rec{0, step_, RoleId::navigator, digest, CallOutcome::ok, -1, {}, {}};
    CompletionResult result;
    try {
      result = complete(backend_, request, config_.transport_retry);
    } catch (const BackendError& e) {
      rec.outcome = CallOutcome::backend_error;
      rec.note = e.what();
      append(calls_, std::move(rec));
      if (d.samples.empty()) throw DecisionError(std::string("decision sampling failed: ") + e.what());
      break;
    }
    std::vector<ThoughtPrediction> samples;
    int bad = 0;
    for (const auto& c : result.completions) {
      try {
        samples.push_back(parse_prediction(c));
      } catch (const MalformedResponse&) {
        ++bad;
      }
    }
    for (const auto& s : samples) rec.predictions.push_back(s.prediction.str());
    if (samples.empty()) rec.outcome = CallOutcome::malformed;
    if (bad > 0) rec.note = fmt::format("{} malformed sample(s)", bad);
    append(calls_, std::move(rec));
    if (samples.size() > d.samples.size()) {
      d.samples = std::move(samples);
      chosen = calls_.size() - 1;
    }
    if (bad == 0) break;
  }
  if (d.samples.empty()) throw DecisionError("no parsable prediction after re-asking the navigator");
  calls_[*chosen].note = calls_[*chosen].note.empty() ? "selected" : calls_[*chosen].note;
  if (calls_[*chosen].note != "selected") {
    spdlog::warn("step {}: {}; using the valid samples", step_, calls_[*chosen].note);
    calls_[*chosen].note = "selected";
  }

  const auto grouped = group_samples(d.samples);
  if (grouped.size() == 1) {
    d.unanimous = true;
    d.final_prediction = grouped.front().first;
    d.groups.push_back({grouped.front().first, grouped.front().second.front(), static_cast<int>(d.samples.size())});
    return d;
  }

  if (!config_.enabled(ExpertGroup::decision_testing)) {
    for (const auto& [pred, thoughts] : grouped)
      d.groups.push_back({pred, thoughts.front(), static_cast<int>(thoughts.size())});
    d.final_prediction = plurality_first_sampled(d.samples);
    d.fallback = true;
    return d;
  }

  for (const auto& [pred, thoughts] : grouped) {
    FusedGroup g{pred, thoughts.front(), static_cast<int>(thoughts.size())};
    if (thoughts.size() >= 2) {
      std::vector<std::string> lines;
      for (const auto& t : thoughts) lines.push_back("- " + text::collapse_spaces(t));
      auto fused = ask(RoleId::thought_fusion, {{"prediction", pred.str()}, {"thoughts", text::join(lines, "\n")}},
                       parse_fused_thought, calls_);
      if (fused)
        g.fused_thought = std::move(*fused);
      else
        spdlog::warn("step {}: thought fusion failed for prediction {}", step_, pred.str());
    }
    d.groups.push_back(std::move(g));
  }

  std::vector<Prediction> candidates;
  std::vector<std::string> blocks;
  for (std::size_t i = 0; i < d.groups.size(); ++i) {
    const auto& g = d.groups[i];
    candidates.push_back(g.prediction);
    blocks.push_back(fmt::format("Candidate {} (support {}):\nThought: {}\nPrediction: {}", i + 1, g.support,
                                 text::collapse_spaces(g.fused_thought), g.prediction.str()));
  }
  auto picked = ask(
      RoleId::decision_testing,
      {{"instruction", ctx.instruction},
       {"viewpoint", ctx.viewpoint},
       {"perception", perception_text(ctx.perception)},
       {"candidates", text::join(blocks, "\n")}},
      [&](const std::string& raw) { return parse_decision_test(raw, candidates); }, calls_);
  if (picked) {
    d.final_prediction = *picked;
  } else {
    d.final_prediction = plurality_vote(d.samples);
    d.fallback = true;
    spdlog::warn("step {}: decision testing failed, plurality fallback -> {}", step_, d.final_prediction.str());
  }
  return d;
}

MoveOutcome Agent::execute(Prediction prediction, const ViewpointId& at) {
  MoveOutcome m;
  if (prediction.is_stop()) {
    m.terminal = true;
    return m;
  }
  const int wanted = prediction.sector_id();
  auto head = candidates_in_sector(world_, at, wanted);
  if (!head.empty()) {
    m.next = head.front();
    m.moved_sector = wanted;
    return m;
  }
  for (int d = 1; d <= kSectorCount / 2; ++d) {
    for (int s : {(wanted + d) % kSectorCount, (wanted - d + kSectorCount) % kSectorCount}) {
      auto c = candidates_in_sector(world_, at, s);
      if (c.empty()) continue;
      m.next = c.front();
      m.moved_sector = s;
      m.snapped = true;
      spdlog::info("step {}: direction {} has no candidate, snapped to {}", step_, wanted, s);
      return m;
    }
  }
  spdlog::warn("step {}: viewpoint {} has no outgoing edges, forcing stop", step_, at);
  m.terminal = true;
  m.forced_stop = true;
  return m;
}

std::string Agent::observation_summary(const PerceptionBundle& bundle, const MoveOutcome& move) const {
  if (move.terminal) return move.forced_stop ? "No way forward." : "Stopped here.";
  const auto& sp = bundle.sectors[move.moved_sector];
  std::string seen;
  if (!sp.raw_text.empty()) {
    seen = sp.raw_text;
  } else {
    std::vector<std::string> parts;
    for (const auto& a : sp.scene_answers)
      if (std::find(parts.begin(), parts.end(), a.answer) == parts.end()) parts.push_back(a.answer);
    if (!sp.object_tags.empty()) parts.push_back("objects: " + text::join(sp.object_tags, ", "));
    seen = parts.empty() ? "nothing reported" : text::join(parts, " ");
  }
  return fmt::format("Moved toward direction {}; {}", move.moved_sector, seen);
}

EpisodeRun Agent::run_episode(const Episode& episode) {
  calls_.clear();
  step_ = 0;
  EpisodeRun run;
  run.visited.push_back(episode.start);
  try {
    InstructionAnalysis analysis;
    if (config_.enabled(ExpertGroup::instruction_analysis))
      analysis = analyze_instruction(episode.instruction);
    else
      analysis.actions = {episode.instruction};

    std::vector<TrajectoryStep> history;
    std::optional<ExecutionState> state;
    ViewpointId at = episode.start;
    for (int t = 1; t <= config_.max_steps; ++t) {
      step_ = t;
      std::vector<Landmark> pending;
      for (const auto& lm : analysis.landmarks) {
        const bool done = state && std::any_of(state->executed.begin(), state->executed.end(), [&](const auto& a) {
                            return text::ifind(a, lm.phrase) != std::string::npos;
                          });
        if (!done) pending.push_back(lm);
      }
      PerceptionBundle perception = config_.enabled(ExpertGroup::vision_perception) ? perceive(at, pending)
                                                                                     : raw_perception(at);
      if (config_.enabled(ExpertGroup::completion_estimation))
        state = estimate_completion(analysis, history, episode.instruction, at, state);

      DecisionContext ctx{episode.instruction, at, t, analysis, format_trajectory(history), state, perception};
      Decision decision = decide(ctx);
      MoveOutcome move = execute(decision.final_prediction, at);

      StepRecord rec;
      rec.step.index = t;
      rec.step.viewpoint = at;
      rec.step.prediction = decision.final_prediction;
      rec.step.execution_state = state;
      rec.step.observation_summary = observation_summary(perception, move);
      for (const auto& g : decision.groups)
        if (g.prediction == decision.final_prediction) rec.step.thought = text::collapse_spaces(g.fused_thought);
      rec.snapped = move.snapped;
      rec.forced_stop = move.forced_stop;
      rec.fallback = decision.fallback;
      rec.moved_to = move.terminal ? ViewpointId{} : move.next;
      history.push_back(rec.step);
      run.steps.push_back(std::move(rec));
      if (move.terminal) {
        run.stopped = decision.final_prediction.is_stop();
        break;
      }
      at = move.next;
      run.visited.push_back(at);
    }
  } catch (const AnalysisError& e) {
    run.error = std::string("analysis: ") + e.what();
  } catch (const DecisionError& e) {
    run.error = std::string("decision: ") + e.what();
  } catch (const TemplateError& e) {
    run.error = std::string("template: ") + e.what();
  }
  run.metrics = compute_metrics(world_, episode, run.visited, config_.success_threshold);
  if (run.error) {
    run.metrics.success = 0.0;
    run.metrics.spl = 0.0;
  }
  run.calls = calls_;
  return run;
}

}  // namespace discussnav
