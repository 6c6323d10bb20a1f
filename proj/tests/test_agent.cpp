#include <doctest.h>

#include "discussnav/oracle_backend.hpp"
#include "discussnav/text.hpp"
#include "support.hpp"

using namespace discussnav;
using namespace testing;

namespace {

AgentConfig quick() {
  AgentConfig c;
  c.transport_retry = no_sleep();
  return c;
}

DecisionContext context(const EnvGraph& g, const ViewpointId& at = "a") {
  DecisionContext ctx;
  ctx.instruction = "Walk toward the kitchen. Stop.";
  ctx.viewpoint = at;
  ctx.analysis.actions = {"walk toward the kitchen", "stop"};
  ctx.analysis.landmarks = {{"the kitchen", LandmarkKind::room}};
  (void)g;
  return ctx;
}

}  // namespace

TEST_CASE("eye exam analysis") {
  const std::string instr = "Stop just past the eye exam chart on the wall.";
  ScriptedBackend b({rule(RoleId::action_decomposition, {"1. walk past\n2. stop"}, {"decompose actions"}),
                     rule(RoleId::landmark_extraction, {"Landmarks:\n1. the eye exam chart on the wall (object)"})});
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  const auto a = agent.analyze_instruction(instr);
  CHECK(a.actions == std::vector<std::string>{"walk past", "stop"});
  REQUIRE(a.landmarks.size() == 1);
  CHECK(a.landmarks[0].phrase == "the eye exam chart on the wall");
  CHECK(instr.find(a.landmarks[0].phrase) != std::string::npos);
  CHECK_FALSE(a.corrected);
}

TEST_CASE("landmark expert corrects the action order") {
  ScriptedBackend b({rule(RoleId::action_decomposition, {"1. stop\n2. walk past"}),
                     rule(RoleId::landmark_extraction,
                          {"Corrected actions:\n1. walk past\n2. stop\nLandmarks:\n1. the eye exam chart on the wall"})});
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  const auto a = agent.analyze_instruction("Stop just past the eye exam chart on the wall.");
  CHECK(a.corrected);
  CHECK(a.actions == std::vector<std::string>{"walk past", "stop"});
}

TEST_CASE("landmark integrity") {
  ScriptedBackend b({rule(RoleId::action_decomposition, {"1. walk past\n2. stop"}),
                     rule(RoleId::landmark_extraction, {"Landmarks:\n1. THE EYE EXAM chart (object)\n2. a sofa"})});
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  // "a sofa" is not in the instruction, so every attempt is malformed
  CHECK_THROWS_AS(agent.analyze_instruction("Stop just past the eye exam chart on the wall."), AnalysisError);
  CHECK(count_role(agent.calls(), RoleId::landmark_extraction) == 3);

  ScriptedBackend ok({rule(RoleId::action_decomposition, {"1. walk past\n2. stop"}),
                      rule(RoleId::landmark_extraction, {"Landmarks:\n1. THE EYE EXAM chart (object)"})});
  Agent agent2(roster(), ok, g, quick());
  const auto a = agent2.analyze_instruction("Stop just past the eye exam chart on the wall.");
  CHECK(a.landmarks[0].phrase == "the eye exam chart");
}

TEST_CASE("degenerate instruction") {
  ScriptedBackend b({rule(RoleId::action_decomposition, {"1. stop"}), rule(RoleId::landmark_extraction, {"Landmarks: none"})});
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  const auto a = agent.analyze_instruction("stop");
  CHECK(a.actions == std::vector<std::string>{"stop"});
  CHECK(a.landmarks.empty());
  CHECK_THROWS_AS(agent.analyze_instruction("  "), AnalysisError);
}

TEST_CASE("perception question counts") {
  ScriptedBackend inner(expert_rules());
  CapturingBackend b(inner);
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());

  const std::vector<Landmark> rooms{{"the kitchen", LandmarkKind::room}, {"the hall", LandmarkKind::room}};
  auto bundle = agent.perceive("b", rooms);
  auto scenes = b.of(RoleId::scene_observation);
  CHECK(scenes.size() == 12);
  for (const auto& r : scenes) CHECK(user_texts(r)[0].find("What room can you see in the current direction") != std::string::npos);
  CHECK(b.of(RoleId::object_detection).size() == 12);
  for (int s = 0; s < kSectorCount; ++s) CHECK(bundle.sectors[s].available);

  b.requests.clear();
  agent.perceive("b", {});
  CHECK(b.of(RoleId::scene_observation).empty());
  CHECK(b.of(RoleId::object_detection).size() == 12);

  b.requests.clear();
  const std::vector<Landmark> two{{"the kitchen", LandmarkKind::room}, {"the red chair", LandmarkKind::color_qualified}};
  agent.perceive("b", two);
  CHECK(b.of(RoleId::scene_observation).size() == 24);

  CHECK_THROWS_AS(agent.perceive("nowhere", {}), std::out_of_range);
}

TEST_CASE("perception is sector ordered under concurrency") {
  ScriptedBackend inner(expert_rules());
  const EnvGraph g = line_world();
  AgentConfig c = quick();
  c.perception_concurrency = 12;
  Agent par(roster(), inner, g, c);
  Agent seq(roster(), inner, g, quick());
  const std::vector<Landmark> lm{{"the kitchen", LandmarkKind::room}};
  par.perceive("b", lm);
  seq.perceive("b", lm);
  CHECK(call_log_jsonl(par.calls()) == call_log_jsonl(seq.calls()));
}

TEST_CASE("failed sector is marked unavailable") {
  ScriptedBackend inner(with(expert_rules(), {rule(RoleId::object_detection, {"x"}, {"direction 4\n"})}));
  // object detection for sector 4 has no rule -> backend error
  std::vector<Rule> rules = expert_rules();
  rules.erase(std::remove_if(rules.begin(), rules.end(), [](const Rule& r) { return r.role == RoleId::object_detection; }),
              rules.end());
  for (int s = 0; s < kSectorCount; ++s)
    if (s != 4) rules.push_back(rule(RoleId::object_detection, {"Tags: floor"}, {fmt::format("direction {}\n", s)}));
  ScriptedBackend b(rules);
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  const auto bundle = agent.perceive("a", {});
  CHECK_FALSE(bundle.sectors[4].available);
  CHECK(bundle.sectors[3].available);
}

TEST_CASE("estimate_completion") {
  ScriptedBackend inner(expert_rules());
  CapturingBackend b(inner);
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  InstructionAnalysis a{{"walk toward the kitchen", "stop"}, {}, false};

  CHECK(agent.estimate_completion(a, {}) == ExecutionState::all_waiting(a.actions));
  CHECK(b.requests.empty());

  std::vector<TrajectoryStep> h(1);
  h[0].index = 1;
  h[0].observation_summary = "a hallway";
  h[0].thought = "go north";
  const auto s = agent.estimate_completion(a, h, "Walk toward the kitchen. Stop.", "b");
  CHECK(s.in_progress == std::vector<std::string>{"walk toward the kitchen"});
  REQUIRE(b.of(RoleId::trajectory_summary).size() == 1);
  CHECK(user_texts(b.of(RoleId::trajectory_summary)[0])[0].find("[Step 1] Observation: a hallway Thought: go north") !=
        std::string::npos);

  SUBCASE("malformed partition falls back to the previous state") {
    ScriptedBackend bad(with(expert_rules(), {rule(RoleId::completion_estimation, {"Prediction: no lists"})}));
    Agent agent2(roster(), bad, g, quick());
    const ExecutionState prev{{"walk toward the kitchen"}, {"stop"}, {}};
    CHECK(agent2.estimate_completion(a, h, "i", "b", prev) == prev);
    CHECK(count_role(agent2.calls(), RoleId::completion_estimation) == 3);
  }
}

TEST_CASE("summary expert drops redundant objects") {
  // The summary reply replaces the raw history in the completion question.
  ScriptedBackend inner(with(expert_rules(), {rule(RoleId::trajectory_summary, {"[Step 1] Moved north past a kitchen."})}));
  CapturingBackend b(inner);
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  InstructionAnalysis a{{"walk toward the kitchen", "stop"}, {}, false};
  std::vector<TrajectoryStep> h(1);
  h[0].index = 1;
  h[0].observation_summary = "a kitchen, cup, cup, spoon, redundant-token";
  h[0].thought = "north";
  agent.estimate_completion(a, h, "i", "b");
  const auto q = user_texts(b.of(RoleId::completion_estimation)[0])[0];
  CHECK(q.find("redundant-token") == std::string::npos);
  CHECK(q.find("Moved north past a kitchen.") != std::string::npos);
}

TEST_CASE("decide: consensus short-circuit") {
  ScriptedBackend b(with(expert_rules(), {rule(RoleId::navigator, {sample("4", 0), sample("4", 1), sample("4", 2),
                                                                   sample("4", 3), sample("4", 4)})}));
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  agent.set_step(1);
  const auto d = agent.decide(context(g));
  CHECK(d.unanimous);
  CHECK(d.final_prediction == Prediction::sector(4));
  CHECK(d.samples.size() == 5);
  CHECK(count_role(agent.calls(), RoleId::thought_fusion) == 0);
  CHECK(count_role(agent.calls(), RoleId::decision_testing) == 0);
}

TEST_CASE("decide: 3/2 split") {
  ScriptedBackend inner(with(expert_rules(),
                             {rule(RoleId::navigator, {sample("0", 0), sample("3", 1), sample("0", 2), sample("3", 3),
                                                       sample("0", 4)}),
                              rule(RoleId::decision_testing, {"Thought: 3 fits.\nPrediction: 3"})}));
  CapturingBackend b(inner);
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  agent.set_step(1);
  const auto d = agent.decide(context(g));
  REQUIRE(d.groups.size() == 2);
  std::multiset<int> supports;
  for (const auto& gr : d.groups) supports.insert(gr.support);
  CHECK(supports == std::multiset<int>{2, 3});
  CHECK(count_role(agent.calls(), RoleId::decision_testing) == 1);
  CHECK(count_role(agent.calls(), RoleId::thought_fusion) == 2);
  CHECK(d.final_prediction == Prediction::sector(3));
  CHECK_FALSE(d.fallback);
}

TEST_CASE("decide: 2/2/1 split forwards all groups") {
  ScriptedBackend inner(with(expert_rules(),
                             {rule(RoleId::navigator, {sample("1", 0), sample("2", 1), sample("1", 2), sample("2", 3),
                                                       sample("stop", 4)}),
                              rule(RoleId::decision_testing, {"Prediction: stop"})}));
  CapturingBackend b(inner);
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  agent.set_step(1);
  const auto d = agent.decide(context(g));
  REQUIRE(d.groups.size() == 3);
  CHECK(count_role(agent.calls(), RoleId::thought_fusion) == 2);  // the singleton passes through
  const auto tests = b.of(RoleId::decision_testing);
  REQUIRE(tests.size() == 1);
  const auto q = user_texts(tests[0])[0];
  CHECK(q.find("Prediction: 1") != std::string::npos);
  CHECK(q.find("Prediction: 2") != std::string::npos);
  CHECK(q.find("Prediction: stop") != std::string::npos);
  CHECK(q.find("(support 1)") != std::string::npos);
  CHECK(d.final_prediction.is_stop());
}

TEST_CASE("decide: tester failure falls back to plurality") {
  SUBCASE("lowest sector wins ties, STOP loses") {
    ScriptedBackend b(with(expert_rules(), {rule(RoleId::navigator, {sample("stop", 0), sample("9", 1), sample("stop", 2),
                                                                     sample("9", 3), sample("10", 4)}),
                                            rule(RoleId::decision_testing, {"Prediction: 5"})}));
    const EnvGraph g = line_world();
    Agent agent(roster(), b, g, quick());
    agent.set_step(1);
    const auto d = agent.decide(context(g));
    CHECK(d.fallback);
    CHECK(d.final_prediction == Prediction::sector(9));
    CHECK(count_role(agent.calls(), RoleId::decision_testing) == 3);
  }
  SUBCASE("plurality") {
    ScriptedBackend b(with(expert_rules(), {rule(RoleId::navigator, {sample("7", 0), sample("2", 1), sample("7", 2),
                                                                     sample("7", 3), sample("2", 4)}),
                                            rule(RoleId::decision_testing, {"no answer"})}));
    const EnvGraph g = line_world();
    Agent agent(roster(), b, g, quick());
    const auto d = agent.decide(context(g));
    CHECK(d.final_prediction == Prediction::sector(7));
  }
}

TEST_CASE("plurality helpers") {
  auto tp = [](Prediction p) { return ThoughtPrediction{"t", p}; };
  const std::vector<ThoughtPrediction> s{tp(Prediction::sector(8)), tp(Prediction::stop()), tp(Prediction::sector(2)),
                                         tp(Prediction::sector(8)), tp(Prediction::sector(2))};
  CHECK(plurality_vote(s) == Prediction::sector(2));
  CHECK(plurality_first_sampled(s) == Prediction::sector(8));
  const std::vector<ThoughtPrediction> st{tp(Prediction::stop()), tp(Prediction::sector(11))};
  CHECK(plurality_vote(st) == Prediction::sector(11));
  CHECK_THROWS_AS(plurality_vote({}), DecisionError);
  const auto groups = group_samples(s);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].first == Prediction::sector(8));
  CHECK(groups[0].second.size() == 2);
}

TEST_CASE("decide: malformed samples") {
  SUBCASE("partly malformed samples are re-asked, then the best attempt is used") {
    ScriptedBackend b(with(expert_rules(), {rule(RoleId::navigator, {sample("4"), "garbage", sample("4"), sample("4"),
                                                                     sample("4")})}));
    const EnvGraph g = line_world();
    Agent agent(roster(), b, g, quick());
    agent.set_step(1);
    const auto d = agent.decide(context(g));
    CHECK(d.samples.size() == 4);
    CHECK(d.final_prediction == Prediction::sector(4));
    CHECK(count_role(agent.calls(), RoleId::navigator) == 3);
    const auto violation = check_discussion_order(agent.calls());
    CHECK_MESSAGE(!violation.has_value(), violation.value_or(""));
  }
  SUBCASE("all malformed") {
    ScriptedBackend b(with(expert_rules(), {rule(RoleId::navigator, {"Prediction: 44"})}));
    const EnvGraph g = line_world();
    Agent agent(roster(), b, g, quick());
    CHECK_THROWS_AS(agent.decide(context(g)), DecisionError);
  }
}

TEST_CASE("execute") {
  const EnvGraph g = line_world();
  ScriptedBackend b(expert_rules());
  Agent agent(roster(), b, g, quick());
  auto m = agent.execute(Prediction::sector(0), "a");
  CHECK(m.next == "b");
  CHECK_FALSE(m.snapped);
  CHECK(agent.execute(Prediction::stop(), "a").terminal);

  // b has edges in sectors 0 (c), 3 (d) and 6 (a); sector 4 snaps to 3 (distance 1)
  m = agent.execute(Prediction::sector(4), "b");
  CHECK(m.next == "d");
  CHECK(m.snapped);
  CHECK(m.moved_sector == 3);
  // sector 9 is 3 away from both 6 and 0: clockwise (0) first
  m = agent.execute(Prediction::sector(9), "b");
  CHECK(m.moved_sector == 0);
  CHECK(m.next == "c");

  EnvGraph lone;
  lone.add_viewpoint("x", {0, 0, 0});
  Agent stuck(roster(), b, lone, quick());
  m = stuck.execute(Prediction::sector(2), "x");
  CHECK(m.terminal);
  CHECK(m.forced_stop);
}

TEST_CASE("execute on hand-built fan") {
  // candidates [v7 (2 m), v9 (4 m)] in sector 3
  EnvGraph g;
  g.add_viewpoint("o", {0, 0, 0});
  const double r1 = 95 * 3.14159265358979323846 / 180, r2 = 100 * 3.14159265358979323846 / 180;
  g.add_viewpoint("v7", {2 * std::sin(r1), 2 * std::cos(r1), 0});
  g.add_viewpoint("v9", {4 * std::sin(r2), 4 * std::cos(r2), 0});
  for (const char* v : {"v7", "v9"})
    g.add_edge({"o", v, heading_between(g.position("o"), g.position(v)), euclidean(g.position("o"), g.position(v))});
  ScriptedBackend b(expert_rules());
  Agent agent(roster(), b, g, quick());
  CHECK(agent.execute(Prediction::sector(3), "o").next == "v7");
  const auto snap = agent.execute(Prediction::sector(4), "o");
  CHECK(snap.snapped);
  CHECK(snap.next == "v7");
}

TEST_CASE("run_episode with the oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto w = generate_synthetic_world(seed, 10, 3);
    OracleBackend oracle(w.graph, w.episodes);
    Agent agent(roster(), oracle, w.graph, quick());
    for (const auto& ep : w.episodes) {
      const auto run = agent.run_episode(ep);
      CHECK_FALSE(run.error.has_value());
      CHECK(run.visited == ep.reference_path);
      CHECK(run.metrics.success == 1.0);
      CHECK(run.metrics.spl == 1.0);
      CHECK(run.stopped);
      CHECK_FALSE(check_discussion_order(run.calls).has_value());
    }
  }
}

TEST_CASE("oracle completion estimate tracks progress") {
  const auto w = generate_synthetic_world(4, 12, 2);
  OracleBackend oracle(w.graph, w.episodes);
  Agent agent(roster(), oracle, w.graph, quick());
  const auto& ep = w.episodes.front();
  const auto run = agent.run_episode(ep);
  const auto actions = synthetic::decompose(ep.instruction);
  for (const auto& s : run.steps) {
    if (s.step.index == 1) continue;
    REQUIRE(s.step.execution_state.has_value());
    const auto pos = std::find(ep.reference_path.begin(), ep.reference_path.end(), s.step.viewpoint) -
                     ep.reference_path.begin();
    const auto done = std::min<std::size_t>(static_cast<std::size_t>(pos), actions.size() - 1);
    CHECK(s.step.execution_state->executed ==
          std::vector<std::string>(actions.begin(), actions.begin() + static_cast<long>(done)));
  }
}

TEST_CASE("max_steps caps a non-stopping agent") {
  ScriptedBackend b(with(expert_rules(), {rule(RoleId::navigator, {sample("0")})}));
  const EnvGraph g = line_world();
  const Episode ep = line_episode(g);
  AgentConfig c = quick();
  c.max_steps = 1;
  Agent agent(roster(), b, g, c);
  const auto run = agent.run_episode(ep);
  REQUIRE(run.steps.size() == 1);
  CHECK(run.steps[0].step.index == 1);
  CHECK_FALSE(run.stopped);
  CHECK(run.visited == std::vector<ViewpointId>{"a", "b"});
  CHECK(run.metrics.navigation_error == doctest::Approx(2.0));
  CHECK(run.metrics.success == 1.0);  // 2 m short of the goal is inside the threshold
}

TEST_CASE("ablations") {
  const EnvGraph g = line_world();
  const Episode ep = line_episode(g);
  auto split = with(expert_rules(), {rule(RoleId::navigator, {sample("0", 0), sample("6", 1), sample("0", 2),
                                                              sample("6", 3), sample("0", 4)},
                                          {"Current viewpoint: a\n"}),
                                     rule(RoleId::navigator, {sample("0", 0), sample("stop", 1), sample("0", 2)},
                                          {"Current viewpoint: b\n"}),
                                     rule(RoleId::navigator, {sample("stop")}),
                                     rule(RoleId::decision_testing, {"Prediction: 0"})});

  SUBCASE("without decision testing") {
    ScriptedBackend b(split);
    AgentConfig c = quick();
    c.ablation = {ExpertGroup::decision_testing};
    Agent agent(roster(), b, g, c);
    const auto run = agent.run_episode(ep);
    CHECK(count_role(run.calls, RoleId::thought_fusion) == 0);
    CHECK(count_role(run.calls, RoleId::decision_testing) == 0);
    CHECK(run.steps[0].fallback);
    CHECK(run.metrics.success == 1.0);
  }
  SUBCASE("without instruction analysis") {
    ScriptedBackend inner(split);
    CapturingBackend b(inner);
    AgentConfig c = quick();
    c.ablation = {ExpertGroup::instruction_analysis};
    Agent agent(roster(), b, g, c);
    const auto run = agent.run_episode(ep);
    CHECK(count_role(run.calls, RoleId::action_decomposition) == 0);
    CHECK(count_role(run.calls, RoleId::landmark_extraction) == 0);
    const auto nav = user_texts(b.of(RoleId::navigator)[0])[0];
    CHECK(nav.find("Actions:\n1. Walk toward the kitchen. Stop.\n") != std::string::npos);
  }
  SUBCASE("without vision perception") {
    ScriptedBackend inner(split);
    CapturingBackend b(inner);
    AgentConfig c = quick();
    c.ablation = {ExpertGroup::vision_perception};
    Agent agent(roster(), b, g, c);
    const auto run = agent.run_episode(ep);
    CHECK(count_role(run.calls, RoleId::scene_observation) == 0);
    CHECK(count_role(run.calls, RoleId::object_detection) == 0);
    CHECK(user_texts(b.of(RoleId::navigator)[0])[0].find("a kitchen with a sink") == std::string::npos);
    CHECK(user_texts(b.of(RoleId::navigator)[1])[0].find("Direction 0: a kitchen with a sink") != std::string::npos);
  }
  SUBCASE("without completion estimation") {
    ScriptedBackend inner(split);
    CapturingBackend b(inner);
    AgentConfig c = quick();
    c.ablation = {ExpertGroup::completion_estimation};
    Agent agent(roster(), b, g, c);
    const auto run = agent.run_episode(ep);
    CHECK(count_role(run.calls, RoleId::trajectory_summary) == 0);
    CHECK(count_role(run.calls, RoleId::completion_estimation) == 0);
    for (const auto& r : b.of(RoleId::navigator)) CHECK(user_texts(r)[0].find("Executed Actions") == std::string::npos);

    ScriptedBackend inner2(split);
    CapturingBackend full(inner2);
    Agent agent2(roster(), full, g, quick());
    agent2.run_episode(ep);
    CHECK(user_texts(full.of(RoleId::navigator)[1])[0].find("Executed Actions") != std::string::npos);
  }
}

TEST_CASE("aborts keep the partial trajectory") {
  ScriptedBackend b(with(expert_rules(), {rule(RoleId::navigator, {sample("0")}, {"Current viewpoint: a\n"}),
                                          rule(RoleId::navigator, {"unparseable"})}));
  const EnvGraph g = line_world();
  Agent agent(roster(), b, g, quick());
  const auto run = agent.run_episode(line_episode(g));
  REQUIRE(run.error.has_value());
  CHECK(run.steps.size() == 1);
  CHECK(run.visited == std::vector<ViewpointId>{"a", "b"});
  CHECK(run.metrics.success == 0.0);
  CHECK(run.metrics.spl == 0.0);
}

TEST_CASE("trajectory and call logs") {
  const auto w = generate_synthetic_world(2, 8, 1);
  OracleBackend oracle(w.graph, w.episodes);
  Agent agent(roster(), oracle, w.graph, quick());
  const auto run = agent.run_episode(w.episodes[0]);
  const std::string log = trajectory_log(run);
  const auto lines = text::split_lines(log);
  int t = 0;
  for (auto line : lines) {
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("t") == ++t);
    CHECK(j.contains("viewpoint"));
    CHECK(j.contains("snapped"));
    CHECK(j.contains("thought"));
    CHECK(j.contains("execution_state"));
    CHECK(j.at("rendered").get<std::string>().rfind("[Step " + std::to_string(t) + "] Observation: ", 0) == 0);
  }
  CHECK(t == static_cast<int>(run.steps.size()));

  CallLog back;
  const std::string calls = call_log_jsonl(run.calls);
  for (auto line : text::split_lines(calls))
    if (!text::trim(line).empty()) back.push_back(parse_call_record(std::string(line)));
  CHECK(call_log_jsonl(back) == call_log_jsonl(run.calls));
}

TEST_CASE("discussion order checker rejects violations") {
  auto rec = [](int step, RoleId role, std::vector<std::string> preds = {}, std::string note = "") {
    return CallRecord{0, step, role, "d", CallOutcome::ok, -1, std::move(preds), std::move(note)};
  };
  CallLog good{rec(0, RoleId::action_decomposition), rec(1, RoleId::scene_observation),
               rec(1, RoleId::completion_estimation), rec(1, RoleId::navigator, {"1", "2"}, "selected"),
               rec(1, RoleId::decision_testing)};
  CHECK_FALSE(check_discussion_order(good).has_value());

  CallLog late_perception = good;
  late_perception.push_back(rec(1, RoleId::object_detection));
  CHECK(check_discussion_order(late_perception).has_value());

  CallLog unanimous{rec(1, RoleId::navigator, {"1", "1"}, "selected"), rec(1, RoleId::thought_fusion)};
  CHECK(check_discussion_order(unanimous).has_value());

  CallLog no_sampling{rec(1, RoleId::scene_observation), rec(1, RoleId::decision_testing)};
  CHECK(check_discussion_order(no_sampling).has_value());

  CallLog analysis_late{rec(1, RoleId::scene_observation), rec(1, RoleId::action_decomposition)};
  CHECK(check_discussion_order(analysis_late).has_value());

  CallLog backwards{rec(2, RoleId::scene_observation), rec(1, RoleId::scene_observation)};
  CHECK(check_discussion_order(backwards).has_value());
}
