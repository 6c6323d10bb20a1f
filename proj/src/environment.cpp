#include "discussnav/environment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "discussnav/landmarks.hpp"

namespace discussnav {

using nlohmann::json;

double euclidean(const Position& a, const Position& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

int sector_of(double heading_deg) {
  if (!(heading_deg >= 0.0 && heading_deg < 360.0))
    throw std::invalid_argument(fmt::format("heading {} outside [0, 360)", heading_deg));
  return std::min(static_cast<int>(std::floor(heading_deg / kSectorWidthDeg)), kSectorCount - 1);
}

double heading_between(const Position& a, const Position& b) {
  double h = std::atan2(b.x - a.x, b.y - a.y) * 180.0 / M_PI;
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

void EnvGraph::add_viewpoint(const ViewpointId& id, Position pos) { positions_[id] = pos; }

void EnvGraph::add_edge(Edge edge) {
  out_index_.emplace(edge.from, edges_.size());
  edges_.push_back(std::move(edge));
}

void EnvGraph::set_observation(const ViewpointId& id, int sector, Observation obs) {
  observations_[{id, sector}] = std::move(obs);
}

Observation& EnvGraph::observation_slot(const ViewpointId& id, int sector) {
  return observations_[{id, sector}];
}

const Position& EnvGraph::position(const ViewpointId& id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) throw std::out_of_range("unknown viewpoint '" + id + "'");
  return it->second;
}

std::vector<const Edge*> EnvGraph::edges_from(const ViewpointId& id) const {
  std::vector<const Edge*> out;
  auto [lo, hi] = out_index_.equal_range(id);
  for (auto it = lo; it != hi; ++it) out.push_back(&edges_[it->second]);
  return out;
}

const Observation* EnvGraph::observation(const ViewpointId& id, int sector) const {
  auto it = observations_.find({id, sector});
  return it == observations_.end() ? nullptr : &it->second;
}

std::optional<double> EnvGraph::edge_length(const ViewpointId& a, const ViewpointId& b) const {
  std::optional<double> best;
  for (const Edge* e : edges_from(a))
    if (e->to == b && (!best || e->distance < *best)) best = e->distance;
  return best;
}

void EnvGraph::validate() const {
  for (const Edge& e : edges_) {
    const std::string name = "edge " + e.from + "->" + e.to;
    if (!has_viewpoint(e.from)) throw LoadError(name + ": unknown viewpoint '" + e.from + "'");
    if (!has_viewpoint(e.to)) throw LoadError(name + ": unknown viewpoint '" + e.to + "'");
    if (!(e.heading >= 0.0 && e.heading < 360.0))
      throw LoadError(fmt::format("{}: heading {} outside [0, 360)", name, e.heading));
    if (!(e.distance > 0.0)) throw LoadError(name + ": distance must be positive");
    const double expected = euclidean(position(e.from), position(e.to));
    if (std::abs(expected - e.distance) > 1e-6)
      throw LoadError(fmt::format("{}: distance {} differs from euclidean {}", name, e.distance,
                                  expected));
  }
  for (const auto& [key, obs] : observations_) {
    if (!has_viewpoint(key.first))
      throw LoadError("observation: unknown viewpoint '" + key.first + "'");
    if (key.second < 0 || key.second >= kSectorCount)
      throw LoadError(fmt::format("observation {}: sector {} outside 0..11", key.first, key.second));
  }
  if (positions_.empty()) return;
  // Weak connectivity.
  std::map<ViewpointId, std::vector<ViewpointId>> undirected;
  for (const Edge& e : edges_) {
    undirected[e.from].push_back(e.to);
    undirected[e.to].push_back(e.from);
  }
  std::set<ViewpointId> seen{positions_.begin()->first};
  std::vector<ViewpointId> stack{positions_.begin()->first};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (const auto& n : undirected[v])
      if (seen.insert(n).second) stack.push_back(n);
  }
  for (const auto& [id, pos] : positions_)
    if (!seen.contains(id)) throw LoadError("viewpoint '" + id + "' is disconnected from the graph");
}

std::vector<ViewpointId> candidates_in_sector(const EnvGraph& graph, const ViewpointId& at,
                                              int sector) {
  std::vector<const Edge*> hits;
  for (const Edge* e : graph.edges_from(at))
    if (sector_of(e->heading) == sector) hits.push_back(e);
  std::sort(hits.begin(), hits.end(), [](const Edge* a, const Edge* b) {
    if (a->distance != b->distance) return a->distance < b->distance;
    return a->to < b->to;
  });
  std::vector<ViewpointId> out;
  for (const Edge* e : hits) out.push_back(e->to);
  return out;
}

namespace {

struct Dijkstra {
  std::map<ViewpointId, double> dist;
  std::map<ViewpointId, ViewpointId> prev;
};

Dijkstra run_dijkstra(const EnvGraph& graph, const ViewpointId& source) {
  Dijkstra d;
  using Item = std::pair<double, ViewpointId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  d.dist[source] = 0.0;
  queue.emplace(0.0, source);
  std::set<ViewpointId> done;
  while (!queue.empty()) {
    auto [du, u] = queue.top();
    queue.pop();
    if (!done.insert(u).second) continue;
    for (const Edge* e : graph.edges_from(u)) {
      const double nd = du + e->distance;
      auto it = d.dist.find(e->to);
      if (it == d.dist.end() || nd < it->second) {
        d.dist[e->to] = nd;
        d.prev[e->to] = u;
        queue.emplace(nd, e->to);
      } else if (nd == it->second && !done.contains(e->to) && u < d.prev[e->to]) {
        d.prev[e->to] = u;
      }
    }
  }
  return d;
}

}  // namespace

double geodesic(const EnvGraph& graph, const ViewpointId& a, const ViewpointId& b) {
  if (!graph.has_viewpoint(a) || !graph.has_viewpoint(b))
    throw std::out_of_range("geodesic: unknown viewpoint");
  if (a == b) return 0.0;
  auto d = run_dijkstra(graph, a);
  auto it = d.dist.find(b);
  return it == d.dist.end() ? kUnreachable : it->second;
}

std::optional<std::vector<ViewpointId>> shortest_path(const EnvGraph& graph, const ViewpointId& a,
                                                      const ViewpointId& b) {
  if (!graph.has_viewpoint(a) || !graph.has_viewpoint(b)) return std::nullopt;
  if (a == b) return std::vector<ViewpointId>{a};
  auto d = run_dijkstra(graph, a);
  if (!d.dist.contains(b)) return std::nullopt;
  std::vector<ViewpointId> path{b};
  while (path.back() != a) path.push_back(d.prev.at(path.back()));
  std::reverse(path.begin(), path.end());
  return path;
}

void bind_episode(const EnvGraph& graph, Episode& episode) {
  const std::string name = "episode '" + episode.id + "'";
  if (episode.instruction.empty()) throw LoadError(name + ": empty instruction");
  for (const auto* vp : {&episode.start, &episode.goal})
    if (!graph.has_viewpoint(*vp)) throw LoadError(name + ": unknown viewpoint '" + *vp + "'");
  const auto& path = episode.reference_path;
  if (path.empty() || path.front() != episode.start || path.back() != episode.goal)
    throw LoadError(name + ": reference_path must run from start to goal");
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!graph.edge_length(path[i], path[i + 1]))
      throw LoadError(name + ": no edge " + path[i] + "->" + path[i + 1] + " on reference_path");
  episode.shortest_length = geodesic(graph, episode.start, episode.goal);
  if (episode.shortest_length == kUnreachable)
    throw LoadError(name + ": goal '" + episode.goal + "' unreachable from start");
}

MetricsReport compute_metrics(const EnvGraph& graph, const Episode& episode,
                              const std::vector<ViewpointId>& visited, double success_threshold) {
  if (visited.empty() || visited.front() != episode.start)
    throw InvalidTrajectory("trajectory must begin at episode start '" + episode.start + "'");
  MetricsReport r;
  r.success_threshold = success_threshold;
  double nearest = kUnreachable;
  for (std::size_t i = 0; i < visited.size(); ++i) {
    if (!graph.has_viewpoint(visited[i]))
      throw InvalidTrajectory("unknown viewpoint '" + visited[i] + "'");
    if (i > 0) {
      auto len = graph.edge_length(visited[i - 1], visited[i]);
      if (!len) throw InvalidTrajectory("no edge " + visited[i - 1] + "->" + visited[i]);
      r.trajectory_length += *len;
    }
    nearest = std::min(nearest, geodesic(graph, visited[i], episode.goal));
  }
  r.navigation_error = geodesic(graph, visited.back(), episode.goal);
  r.success = r.navigation_error < success_threshold ? 1.0 : 0.0;
  r.oracle_success = nearest < success_threshold ? 1.0 : 0.0;
  const double denom = std::max(r.trajectory_length, episode.shortest_length);
  r.spl = denom == 0.0 ? r.success : r.success * episode.shortest_length / denom;
  return r;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw LoadError(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw LoadError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

EnvGraph parse_world(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("world: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw LoadError("world: top level must be an object");
  EnvGraph g;
  const json& vps = root.contains("viewpoints") ? root["viewpoints"] : json();
  if (!vps.is_object() || vps.empty()) throw LoadError("world: 'viewpoints' must be a non-empty object");
  for (const auto& [id, p] : vps.items()) {
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
        !p[2].is_number())
      throw LoadError("viewpoint '" + id + "': position must be [x, y, z]");
    g.add_viewpoint(id, {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  const json edges = root.value("edges", json::array());
  if (!edges.is_array()) throw LoadError("world: 'edges' must be a list");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = fmt::format("edge #{}", i);
    g.add_edge({field<std::string>(edges[i], "from", where), field<std::string>(edges[i], "to", where),
                field<double>(edges[i], "heading", where), field<double>(edges[i], "distance", where)});
  }
  const json obs = root.value("observations", json::array());
  if (!obs.is_array()) throw LoadError("world: 'observations' must be a list");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string where = fmt::format("observation #{}", i);
    Observation o;
    o.scene_text = field<std::string>(obs[i], "scene_text", where);
    o.object_tags = obs[i].value("object_tags", std::vector<std::string>{});
    g.set_observation(field<std::string>(obs[i], "viewpoint", where), field<int>(obs[i], "sector", where),
                      std::move(o));
  }
  g.validate();
  return g;
}

EnvGraph load_world(const std::filesystem::path& path) {
  try {
    return parse_world(read_file(path));
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

std::string serialize_world(const EnvGraph& graph) {
  json root;
  root["viewpoints"] = json::object();
  for (const auto& [id, p] : graph.viewpoints()) root["viewpoints"][id] = {p.x, p.y, p.z};
  root["edges"] = json::array();
  for (const Edge& e : graph.edges())
    root["edges"].push_back({{"from", e.from}, {"to", e.to}, {"heading", e.heading}, {"distance", e.distance}});
  root["observations"] = json::array();
  for (const auto& [key, o] : graph.observations())
    root["observations"].push_back({{"viewpoint", key.first},
                                    {"sector", key.second},
                                    {"scene_text", o.scene_text},
                                    {"object_tags", o.object_tags}});
  return root.dump(1) + "\n";
}

void save_world(const EnvGraph& graph, const std::filesystem::path& path) {
  write_file(path, serialize_world(graph));
}

std::vector<Episode> parse_episodes(const std::string& text, const EnvGraph& graph) {
  std::vector<Episode> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = fmt::format("episode line {}", lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw LoadError(where + ": invalid JSON");
    }
    Episode e;
    e.id = field<std::string>(j, "id", where);
    e.instruction = field<std::string>(j, "instruction", where);
    e.start = field<std::string>(j, "start", where);
    e.goal = field<std::string>(j, "goal", where);
    e.reference_path = field<std::vector<std::string>>(j, "reference_path", where);
    if (!ids.insert(e.id).second) throw LoadError(where + ": duplicate id '" + e.id + "'");
    bind_episode(graph, e);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Episode> load_episodes(const std::filesystem::path& path, const EnvGraph& graph) {
  try {
    return parse_episodes(read_file(path), graph);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

std::string serialize_episodes(const std::vector<Episode>& episodes) {
  std::string out;
  for (const Episode& e : episodes) {
    json j{{"id", e.id},
           {"instruction", e.instruction},
           {"start", e.start},
           {"goal", e.goal},
           {"reference_path", e.reference_path}};
    out += j.dump() + "\n";
  }
  return out;
}

void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& path) {
  write_file(path, serialize_episodes(episodes));
}

// ---------------------------------------------------------------------------
// Synthetic worlds

namespace {

constexpr double kMinSeparation = 1.5;

struct Layout {
  std::vector<Position> pos;
  std::vector<std::array<int, kSectorCount>> slot;  // neighbour index per sector, -1 free
};

bool link_fits(const Layout& l, int a, int b) {
  return l.slot[a][sector_of(heading_between(l.pos[a], l.pos[b]))] < 0 &&
         l.slot[b][sector_of(heading_between(l.pos[b], l.pos[a]))] < 0;
}

void link(Layout& l, int a, int b) {
  l.slot[a][sector_of(heading_between(l.pos[a], l.pos[b]))] = b;
  l.slot[b][sector_of(heading_between(l.pos[b], l.pos[a]))] = a;
}

std::string pick(std::mt19937_64& rng, std::span<const std::string_view> words) {
  return std::string(words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)]);
}

std::string landmark_phrase(std::mt19937_64& rng) {
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return "the " + pick(rng, synthetic::rooms());
    case 1: return "the " + pick(rng, synthetic::objects());
    case 2: return "the " + pick(rng, synthetic::colors()) + " " + pick(rng, synthetic::objects());
    default: return "the " + pick(rng, synthetic::infrastructure());
  }
}

}  // namespace

SyntheticWorld generate_synthetic_world(std::uint64_t seed, int n_viewpoints, int n_episodes) {
  if (n_viewpoints < 2) throw std::invalid_argument("generate_synthetic_world: need >= 2 viewpoints");
  std::mt19937_64 rng(seed);
  const double side = std::max(10.0, 4.0 * std::sqrt(static_cast<double>(n_viewpoints)));
  std::uniform_real_distribution<double> coord(0.0, side);

  Layout l;
  std::vector<std::pair<int, int>> links;
  for (int i = 0; i < n_viewpoints; ++i) {
    for (int attempt = 0;; ++attempt) {
      Position p{coord(rng), coord(rng), 0.0};
      bool spaced = std::all_of(l.pos.begin(), l.pos.end(),
                                [&](const Position& q) { return euclidean(p, q) >= kMinSeparation; });
      if (!spaced && attempt < 10000) continue;
      l.pos.push_back(p);
      l.slot.emplace_back();
      l.slot.back().fill(-1);
      if (i == 0) break;
      std::vector<int> parents(i);
      for (int k = 0; k < i; ++k) parents[k] = k;
      std::sort(parents.begin(), parents.end(), [&](int a, int b) {
        return euclidean(p, l.pos[a]) < euclidean(p, l.pos[b]);
      });
      auto parent = std::find_if(parents.begin(), parents.end(),
                                 [&](int k) { return link_fits(l, k, i); });
      if (parent == parents.end()) {
        l.pos.pop_back();
        l.slot.pop_back();
        continue;
      }
      link(l, *parent, i);
      links.emplace_back(*parent, i);
      break;
    }
  }
  std::uniform_int_distribution<int> any(0, n_viewpoints - 1);
  for (int k = 0; k < n_viewpoints / 2; ++k) {
    int a = any(rng), b = any(rng);
    if (a == b || euclidean(l.pos[a], l.pos[b]) > side / 2.0) continue;
    if (std::any_of(l.slot[a].begin(), l.slot[a].end(), [&](int n) { return n == b; })) continue;
    if (!link_fits(l, a, b)) continue;
    link(l, a, b);
    links.emplace_back(a, b);
  }

  const int width = n_viewpoints > 1000 ? 4 : 3;
  auto id_of = [&](int i) { return fmt::format("v{:0{}d}", i, width); };

  SyntheticWorld world;
  EnvGraph& g = world.graph;
  for (int i = 0; i < n_viewpoints; ++i) g.add_viewpoint(id_of(i), l.pos[i]);
  for (auto [a, b] : links) {
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, a}})
      g.add_edge({id_of(u), id_of(v), heading_between(l.pos[u], l.pos[v]), euclidean(l.pos[u], l.pos[v])});
  }
  for (int i = 0; i < n_viewpoints; ++i)
    for (int s = 0; s < kSectorCount; ++s)
      g.set_observation(id_of(i), s,
                        l.slot[i][s] >= 0 ? Observation{"an open passage", {"floor"}}
                                          : Observation{"a plain wall", {"wall"}});

  for (int e = 0; e < n_episodes; ++e) {
    int a = any(rng), b = any(rng);
    while (b == a) b = any(rng);
    Episode ep;
    ep.id = fmt::format("ep{:03d}", e);
    ep.start = id_of(a);
    ep.goal = id_of(b);
    ep.reference_path = *shortest_path(g, ep.start, ep.goal);
    std::vector<std::string> phrases;
    std::string instruction;
    for (int attempt = 0; attempt < 64; ++attempt) {
      phrases.clear();
      instruction.clear();
      std::set<std::string> used;
      for (std::size_t h = 0; h + 1 < ep.reference_path.size(); ++h) {
        std::string phrase = landmark_phrase(rng);
        for (int retry = 0; used.contains(phrase) && retry < 16; ++retry) phrase = landmark_phrase(rng);
        used.insert(phrase);
        if (!instruction.empty()) instruction += " ";
        instruction += pick(rng, synthetic::verbs()) + " " + phrase + ".";
        phrases.push_back(phrase);
      }
      instruction += instruction.empty() ? "Stop." : " Stop.";
      if (std::none_of(world.episodes.begin(), world.episodes.end(),
                       [&](const Episode& other) { return other.instruction == instruction; }))
        break;
    }
    for (std::size_t h = 0; h < phrases.size(); ++h) {
      const auto& from = ep.reference_path[h];
      const int sector = sector_of(heading_between(g.position(from), g.position(ep.reference_path[h + 1])));
      Observation& slot = g.observation_slot(from, sector);
      const std::string bare = phrases[h].substr(4);
      slot.scene_text += ", " + bare;
      slot.object_tags.push_back(bare);
    }
    ep.instruction = std::move(instruction);
    world.episodes.push_back(std::move(ep));
  }
  for (Episode& ep : world.episodes) bind_episode(g, ep);
  g.validate();
  return world;
}

}  // namespace discussnav
