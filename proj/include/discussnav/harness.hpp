#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "discussnav/agent.hpp"

namespace discussnav {

namespace fs = std::filesystem;

/// One world and its episode file. `scripted` is the per-world rule file used by
/// the plain "scripted" backend selector.
struct WorldSpec {
  std::string label;
  fs::path world;
  fs::path episodes;
  std::optional<fs::path> scripted;
};

struct SuiteConfig {
  std::vector<WorldSpec> worlds;
  /// scripted | scripted:<file> | replay:<dir> | oracle | remote:<model>
  std::string backend = "oracle";
  AgentConfig agent;
  std::uint64_t seed = 0;
  fs::path out;
  int parallel = 1;
  /// When set, every episode's exchanges are written to transcript.jsonl.
  bool record = false;
  std::optional<fs::path> prompts;
  std::string label = "DiscussNav";
};

/// Reads manifest.json from a gen-fixtures directory.
std::vector<WorldSpec> fixture_worlds(const fs::path& dir);

struct EpisodeResult {
  std::string key;  // "<world label>-<episode id>"
  std::string world;
  std::string episode;
  MetricsReport metrics;
  int steps = 0;
  std::map<RoleId, int> calls;
  std::optional<std::string> error;
};

struct SuiteReport {
  std::string label;
  std::vector<EpisodeResult> episodes;
  double tl = 0, ne = 0, osr = 0, sr = 0, spl = 0;  // TL/NE in meters, rest in percent
  std::map<RoleId, int> calls;
  std::string config_echo;  // JSON
  std::string prompts_checksum;

  void aggregate();
  std::string json() const;
  int calls_to(ExpertGroup group) const;
};

SuiteReport run_suite(const SuiteConfig& config);

extern const std::array<std::pair<std::optional<ExpertGroup>, std::string_view>, 5> kAblationRows;

/// The full pipeline plus one run per disabled group, each in its own
/// subdirectory of config.out, with a combined table.
std::vector<SuiteReport> run_ablations(const SuiteConfig& config);

std::string metrics_table(const std::vector<SuiteReport>& reports);
std::string ablation_table(const std::vector<SuiteReport>& reports);

struct FixtureOptions {
  std::uint64_t seed = 7;
  int n_envs = 4;
  int episodes_per_env = 5;
  int n_viewpoints = 10;
};

/// Writes env_XXX/{world.json, episodes.jsonl, scripted.json} and manifest.json.
void generate_fixtures(const FixtureOptions& options, const fs::path& dir);

/// Scripted rules that answer every role consistently with ground truth. On
/// every viewpoint the navigator rule yields a 3/2 split in favour of the true move.
std::vector<ScriptedBackend::Rule> oracle_rules(const EnvGraph& world, const std::vector<Episode>& episodes);

}  // namespace discussnav
