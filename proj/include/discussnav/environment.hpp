#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace discussnav {

using ViewpointId = std::string;

inline constexpr int kSectorCount = 12;
inline constexpr double kSectorWidthDeg = 30.0;
inline constexpr double kDefaultSuccessThreshold = 3.0;

/// Thrown when a world or episode file violates its schema or invariants.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by compute_metrics when a trajectory is not a walk over the graph.
class InvalidTrajectory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double euclidean(const Position& a, const Position& b);

struct Edge {
  ViewpointId from;
  ViewpointId to;
  double heading = 0.0;  // degrees, [0, 360)
  double distance = 0.0;
};

struct Observation {
  std::string scene_text;
  std::vector<std::string> object_tags;
};

/// Sector k covers headings [30k, 30(k+1)).
int sector_of(double heading_deg);

/// Compass heading from a to b: 0 = +y, clockwise toward +x.
double heading_between(const Position& a, const Position& b);

/// Navigable world. Immutable once validated.
class EnvGraph {
 public:
  EnvGraph() = default;

  void add_viewpoint(const ViewpointId& id, Position pos);
  void add_edge(Edge edge);
  void set_observation(const ViewpointId& id, int sector, Observation obs);
  Observation& observation_slot(const ViewpointId& id, int sector);

  /// Checks endpoint existence, heading range and distance consistency.
  /// Throws LoadError naming the offending entity.
  void validate() const;

  bool has_viewpoint(const ViewpointId& id) const { return positions_.contains(id); }
  const Position& position(const ViewpointId& id) const;
  const std::map<ViewpointId, Position>& viewpoints() const { return positions_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<const Edge*> edges_from(const ViewpointId& id) const;
  const Observation* observation(const ViewpointId& id, int sector) const;
  const std::map<std::pair<ViewpointId, int>, Observation>& observations() const {
    return observations_;
  }

  /// Shortest edge length a→b, if an edge exists.
  std::optional<double> edge_length(const ViewpointId& a, const ViewpointId& b) const;

 private:
  std::map<ViewpointId, Position> positions_;
  std::vector<Edge> edges_;
  std::multimap<ViewpointId, std::size_t> out_index_;
  std::map<std::pair<ViewpointId, int>, Observation> observations_;
};

/// Outgoing neighbours of `at` in `sector`, nearest first, ties by id.
std::vector<ViewpointId> candidates_in_sector(const EnvGraph& graph, const ViewpointId& at,
                                              int sector);

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Graph shortest-path length; kUnreachable when no path exists.
double geodesic(const EnvGraph& graph, const ViewpointId& a, const ViewpointId& b);

/// Shortest path a→b (inclusive). Ties between equal-length paths resolve toward
/// lexicographically smaller predecessors so the result is deterministic.
std::optional<std::vector<ViewpointId>> shortest_path(const EnvGraph& graph, const ViewpointId& a,
                                                      const ViewpointId& b);

struct Episode {
  std::string id;
  std::string instruction;
  ViewpointId start;
  ViewpointId goal;
  std::vector<ViewpointId> reference_path;
  double shortest_length = 0.0;
};

/// Validates an episode against a world and fills shortest_length.
void bind_episode(const EnvGraph& graph, Episode& episode);

struct MetricsReport {
  double trajectory_length = 0.0;  // TL
  double navigation_error = 0.0;   // NE
  double success = 0.0;            // SR
  double oracle_success = 0.0;     // OSR
  double spl = 0.0;                // SPL
  double success_threshold = kDefaultSuccessThreshold;
};

/// Metrics for a visited-viewpoint sequence that begins at the episode start.
MetricsReport compute_metrics(const EnvGraph& graph, const Episode& episode,
                              const std::vector<ViewpointId>& visited,
                              double success_threshold = kDefaultSuccessThreshold);

// File formats. World: JSON object {viewpoints, edges, observations}. Episodes: JSONL.
EnvGraph load_world(const std::filesystem::path& path);
EnvGraph parse_world(const std::string& text);
std::string serialize_world(const EnvGraph& graph);
void save_world(const EnvGraph& graph, const std::filesystem::path& path);

std::vector<Episode> load_episodes(const std::filesystem::path& path, const EnvGraph& graph);
std::vector<Episode> parse_episodes(const std::string& text, const EnvGraph& graph);
std::string serialize_episodes(const std::vector<Episode>& episodes);
void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& path);

struct SyntheticWorld {
  EnvGraph graph;
  std::vector<Episode> episodes;
};

/// Deterministic desk-scale world: a connected layout with at most one outgoing
/// edge per sector at every viewpoint, and episodes whose instructions follow
/// the synthetic grammar (see landmarks.hpp) with landmarks planted along the
/// reference path.
SyntheticWorld generate_synthetic_world(std::uint64_t seed, int n_viewpoints, int n_episodes);

}  // namespace discussnav
