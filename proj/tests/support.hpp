#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <set>

#include <unistd.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "discussnav/agent.hpp"
#include "discussnav/backend.hpp"
#include "discussnav/environment.hpp"
#include "discussnav/roster.hpp"

namespace testing {

using namespace discussnav;

// Minimum over every simple path, found by exhaustive DFS. Independent of the
// Dijkstra implementation under test.
inline double brute_geodesic(const EnvGraph& g, const ViewpointId& a, const ViewpointId& b) {
  if (a == b) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::set<ViewpointId> on_path{a};
  std::function<void(const ViewpointId&, double)> dfs = [&](const ViewpointId& at, double len) {
    for (const Edge& e : g.edges()) {
      if (e.from != at || on_path.contains(e.to)) continue;
      if (e.to == b) {
        best = std::min(best, len + e.distance);
        continue;
      }
      on_path.insert(e.to);
      dfs(e.to, len + e.distance);
      on_path.erase(e.to);
    }
  };
  dfs(a, 0.0);
  return best;
}

inline double brute_edge(const EnvGraph& g, const ViewpointId& a, const ViewpointId& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Edge& e : g.edges())
    if (e.from == a && e.to == b) best = std::min(best, e.distance);
  return best;
}

struct BruteMetrics {
  double tl = 0, ne = 0, sr = 0, osr = 0, spl = 0;
};

inline BruteMetrics brute_metrics(const EnvGraph& g, const Episode& ep, const std::vector<ViewpointId>& visited,
                                  double threshold = 3.0) {
  BruteMetrics m;
  for (std::size_t i = 1; i < visited.size(); ++i) m.tl += brute_edge(g, visited[i - 1], visited[i]);
  m.ne = brute_geodesic(g, visited.back(), ep.goal);
  m.sr = m.ne < threshold ? 1.0 : 0.0;
  for (const auto& v : visited)
    if (brute_geodesic(g, v, ep.goal) < threshold) m.osr = 1.0;
  const double l = brute_geodesic(g, ep.start, ep.goal);
  m.spl = (m.tl == 0 && l == 0) ? m.sr : m.sr * l / std::max(m.tl, l);
  return m;
}

inline std::vector<ViewpointId> random_walk(const EnvGraph& g, const ViewpointId& start, int hops, std::mt19937_64& rng) {
  std::vector<ViewpointId> out{start};
  for (int i = 0; i < hops; ++i) {
    auto edges = g.edges_from(out.back());
    if (edges.empty()) break;
    out.push_back(edges[std::uniform_int_distribution<std::size_t>(0, edges.size() - 1)(rng)]->to);
  }
  return out;
}

inline const ExpertRoster& roster() {
  static const ExpertRoster r(PromptPack::load_default());
  return r;
}

inline std::vector<std::string> user_texts(const CompletionRequest& r) {
  std::vector<std::string> out;
  for (const auto& m : r.messages)
    if (m.speaker == Speaker::user) out.push_back(m.content);
  return out;
}

// Records every request before forwarding it.
class CapturingBackend : public Backend {
 public:
  explicit CapturingBackend(Backend& inner) : inner_(inner) {}
  CompletionResult complete(const CompletionRequest& request) override {
    {
      std::lock_guard lock(mu_);
      requests.push_back(request);
    }
    return inner_.complete(request);
  }
  std::string id() const override { return "capture"; }

  std::vector<CompletionRequest> of(RoleId role) const {
    std::vector<CompletionRequest> out;
    for (const auto& r : requests)
      if (r.role == role) out.push_back(r);
    return out;
  }

  std::vector<CompletionRequest> requests;

 private:
  Backend& inner_;
  std::mutex mu_;
};

// Three viewpoints on a north-south line plus a side branch:
//   a (0,0) -> b (0,2) -> c (0,4); b -> d (2,2)
inline EnvGraph line_world() {
  EnvGraph g;
  g.add_viewpoint("a", {0, 0, 0});
  g.add_viewpoint("b", {0, 2, 0});
  g.add_viewpoint("c", {0, 4, 0});
  g.add_viewpoint("d", {2, 2, 0});
  auto link = [&](const ViewpointId& x, const ViewpointId& y) {
    const Position p = g.position(x), q = g.position(y);
    g.add_edge({x, y, heading_between(p, q), euclidean(p, q)});
    g.add_edge({y, x, heading_between(q, p), euclidean(q, p)});
  };
  link("a", "b");
  link("b", "c");
  link("b", "d");
  for (const auto& v : {"a", "b", "c", "d"})
    for (int s = 0; s < kSectorCount; ++s) g.set_observation(v, s, {"a hallway", {"floor"}});
  g.set_observation("b", 0, {"a kitchen with a sink", {"sink", "counter"}});
  g.validate();
  return g;
}

inline Episode line_episode(const EnvGraph& g, std::string instruction = "Walk toward the kitchen. Stop.") {
  Episode e{"ep", std::move(instruction), "a", "c", {"a", "b", "c"}, 0.0};
  bind_episode(g, e);
  return e;
}

using Rule = ScriptedBackend::Rule;

inline Rule rule(RoleId role, std::vector<std::string> responses, std::vector<std::string> contains = {}) {
  return {role, std::move(contains), std::move(responses)};
}

// Generic answers for every expert of the line world.
inline std::vector<Rule> expert_rules() {
  return {
      rule(RoleId::action_decomposition, {"1. walk toward the kitchen\n2. stop"}),
      rule(RoleId::landmark_extraction, {"Landmarks:\n1. the kitchen (room)"}),
      rule(RoleId::scene_observation, {"I can see a hallway."}),
      rule(RoleId::object_detection, {"Tags: floor"}),
      rule(RoleId::trajectory_summary, {"Walked north through a hallway."}),
      rule(RoleId::completion_estimation,
           {"Thought: still walking.\nPrediction:\nExecuted Actions: none\nIn-progress Actions: walk toward the "
            "kitchen\nActions Waiting to be Executed: stop"}),
      rule(RoleId::thought_fusion, {"Fused thought: these samples agree."}),
  };
}

inline std::vector<Rule> with(std::vector<Rule> base, std::vector<Rule> extra) {
  // Extra rules take precedence.
  extra.insert(extra.end(), base.begin(), base.end());
  return extra;
}

inline std::string sample(const std::string& p, int i = 0) {
  return "Thought: option " + std::to_string(i) + " for " + p + ".\nPrediction: " + p;
}

inline int count_role(const CallLog& log, RoleId role) {
  return static_cast<int>(std::count_if(log.begin(), log.end(), [&](const CallRecord& r) { return r.role == role; }));
}

inline RetryPolicy no_sleep() {
  RetryPolicy p;
  p.sleep = [](std::chrono::milliseconds) {};
  return p;
}

}  // namespace testing
