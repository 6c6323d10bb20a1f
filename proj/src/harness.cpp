#include "discussnav/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "discussnav/landmarks.hpp"
#include "discussnav/oracle_backend.hpp"
#include "discussnav/remote_backend.hpp"
#include "discussnav/text.hpp"

namespace discussnav {

using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json metrics_json(const MetricsReport& m) {
  return {{"TL", m.trajectory_length}, {"NE", m.navigation_error}, {"OSR", m.oracle_success},
          {"SR", m.success},           {"SPL", m.spl},             {"success_threshold", m.success_threshold}};
}

json calls_json(const std::map<RoleId, int>& calls) {
  json j = json::object();
  for (RoleId r : kAllRoles) {
    auto it = calls.find(r);
    j[std::string(to_string(r))] = it == calls.end() ? 0 : it->second;
  }
  return j;
}

std::string config_echo(const SuiteConfig& c, std::size_t n_episodes) {
  json ablation = json::array();
  for (ExpertGroup g : c.agent.ablation) ablation.push_back(to_string(g));
  json j{{"label", c.label},
         {"seed", c.seed},
         {"episodes", n_episodes},
         {"agent",
          {{"breadth", c.agent.decision_sampling.breadth},
           {"diversity", c.agent.decision_sampling.diversity},
           {"max_steps", c.agent.max_steps},
           {"retry_limit", c.agent.retry_limit},
           {"success_threshold", c.agent.success_threshold},
           {"ablation", ablation}}}};
  return j.dump();
}

struct WorldData {
  WorldSpec spec;
  std::unique_ptr<EnvGraph> graph;
  std::vector<Episode> episodes;
  std::unique_ptr<Backend> backend;  // shared by the world's episodes unless replaying
};

struct Job {
  WorldData* world;
  const Episode* episode;
  std::string key;
};

std::unique_ptr<Backend> world_backend(const SuiteConfig& c, const WorldData& w) {
  const std::string& b = c.backend;
  if (b == "oracle") return std::make_unique<OracleBackend>(*w.graph, w.episodes);
  if (b == "scripted") {
    if (!w.spec.scripted) throw std::invalid_argument("world '" + w.spec.label + "' has no scripted rule file");
    return std::make_unique<ScriptedBackend>(ScriptedBackend::load(*w.spec.scripted));
  }
  if (b.starts_with("scripted:")) return std::make_unique<ScriptedBackend>(ScriptedBackend::load(b.substr(9)));
  if (b.starts_with("replay:")) return nullptr;
  if (b == "remote" || b.starts_with("remote:"))
    return std::make_unique<RemoteBackend>(RemoteConfig::from_env(b.size() > 7 ? b.substr(7) : std::string()));
  throw std::invalid_argument("unknown backend '" + b + "'");
}

}  // namespace

std::vector<WorldSpec> fixture_worlds(const fs::path& dir) {
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  std::vector<WorldSpec> out;
  for (const auto& env : manifest.at("envs")) {
    WorldSpec w;
    w.label = env.at("name").get<std::string>();
    w.world = dir / env.at("world").get<std::string>();
    w.episodes = dir / env.at("episodes").get<std::string>();
    if (env.contains("scripted")) w.scripted = dir / env.at("scripted").get<std::string>();
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------

void SuiteReport::aggregate() {
  tl = ne = osr = sr = spl = 0;
  calls.clear();
  for (const auto& e : episodes) {
    tl += e.metrics.trajectory_length;
    ne += e.metrics.navigation_error;
    osr += e.metrics.oracle_success;
    sr += e.metrics.success;
    spl += e.metrics.spl;
    for (const auto& [r, n] : e.calls) calls[r] += n;
  }
  if (episodes.empty()) return;
  const double n = static_cast<double>(episodes.size());
  tl /= n;
  ne /= n;
  osr = osr / n * 100.0;
  sr = sr / n * 100.0;
  spl = spl / n * 100.0;
}

int SuiteReport::calls_to(ExpertGroup group) const {
  int n = 0;
  for (RoleId r : roles_of(group))
    if (auto it = calls.find(r); it != calls.end()) n += it->second;
  return n;
}

std::string SuiteReport::json() const {
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& e : episodes) {
    nlohmann::json j{{"key", e.key},
                     {"world", e.world},
                     {"episode", e.episode},
                     {"metrics", metrics_json(e.metrics)},
                     {"steps", e.steps},
                     {"calls", calls_json(e.calls)}};
    j["error"] = e.error ? nlohmann::json(*e.error) : nlohmann::json(nullptr);
    eps.push_back(std::move(j));
  }
  nlohmann::json j{{"label", label},
                   {"config", nlohmann::json::parse(config_echo)},
                   {"prompts", prompts_checksum},
                   {"aggregate", {{"TL", tl}, {"NE", ne}, {"OSR", osr}, {"SR", sr}, {"SPL", spl}}},
                   {"calls", calls_json(calls)},
                   {"episodes", eps}};
  return j.dump(2) + "\n";
}

SuiteReport run_suite(const SuiteConfig& config) {
  config.agent.validate();
  if (config.parallel < 1) throw std::invalid_argument("parallel must be >= 1");
  if (config.out.empty()) throw std::invalid_argument("no output directory");
  const PromptPack pack = config.prompts ? PromptPack::load(*config.prompts) : PromptPack::load_default();
  const ExpertRoster roster(pack);
  spdlog::info("prompt pack checksum {}", roster.checksum());

  // Everything that can fail on configuration happens before the first write.
  std::vector<WorldData> worlds;
  worlds.reserve(config.worlds.size());
  for (const auto& spec : config.worlds) {
    WorldData w;
    w.spec = spec;
    w.graph = std::make_unique<EnvGraph>(load_world(spec.world));
    w.episodes = load_episodes(spec.episodes, *w.graph);
    w.backend = world_backend(config, w);
    worlds.push_back(std::move(w));
  }
  std::vector<Job> jobs;
  for (auto& w : worlds)
    for (const auto& e : w.episodes) jobs.push_back({&w, &e, w.spec.label + "-" + e.id});

  SuiteReport report;
  report.label = config.label;
  report.config_echo = config_echo(config, jobs.size());
  report.prompts_checksum = roster.checksum();
  report.episodes.resize(jobs.size());

  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    const fs::path dir = config.out / "episodes" / job.key;
    fs::create_directories(dir);
    EpisodeResult& res = report.episodes[i];
    res.key = job.key;
    res.world = job.world->spec.label;
    res.episode = job.episode->id;

    std::unique_ptr<Backend> replay;
    Backend* backend = job.world->backend.get();
    if (!backend) {
      replay = std::make_unique<ReplayBackend>(fs::path(config.backend.substr(7)) / "episodes" / job.key /
                                               "transcript.jsonl");
      backend = replay.get();
    }
    std::unique_ptr<RecordingBackend> recorder;
    if (config.record) {
      recorder = record(*backend, dir / "transcript.jsonl",
                        {job.world->spec.label, job.episode->id, config.seed, roster.checksum()});
      backend = recorder.get();
    }

    Agent agent(roster, *backend, *job.world->graph, config.agent);
    EpisodeRun run;
    try {
      run = agent.run_episode(*job.episode);
    } catch (const std::exception& e) {
      run.calls = agent.calls();
      run.error = e.what();
      run.metrics = compute_metrics(*job.world->graph, *job.episode, {job.episode->start}, config.agent.success_threshold);
      run.metrics.success = run.metrics.spl = 0.0;
    }
    res.metrics = run.metrics;
    res.steps = static_cast<int>(run.steps.size());
    res.error = run.error;
    for (const auto& c : run.calls) ++res.calls[c.role];
    if (run.error) spdlog::warn("episode {} aborted: {}", job.key, *run.error);

    write_file(dir / "trajectory.jsonl", trajectory_log(run));
    write_file(dir / "calls.jsonl", call_log_jsonl(run.calls));
    nlohmann::json m = metrics_json(run.metrics);
    m["error"] = run.error ? nlohmann::json(*run.error) : nlohmann::json(nullptr);
    write_file(dir / "metrics.json", m.dump(2) + "\n");
  };

  if (config.parallel == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.parallel));
    std::vector<std::thread> pool;
    for (int t = 0; t < config.parallel; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
        } catch (...) {
          failures[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }

  report.aggregate();
  write_file(config.out / "suite_report.json", report.json());
  write_file(config.out / "table.txt", metrics_table({report}));
  return report;
}

// ---------------------------------------------------------------------------

const std::array<std::pair<std::optional<ExpertGroup>, std::string_view>, 5> kAblationRows{{
    {std::nullopt, "DiscussNav"},
    {ExpertGroup::instruction_analysis, "w/o Instruction Analysis Experts"},
    {ExpertGroup::vision_perception, "w/o Vision Perception Experts"},
    {ExpertGroup::completion_estimation, "w/o Completion Estimation Experts"},
    {ExpertGroup::decision_testing, "w/o Decision Testing Experts"},
}};

std::vector<SuiteReport> run_ablations(const SuiteConfig& config) {
  std::vector<SuiteReport> reports;
  for (const auto& [group, label] : kAblationRows) {
    SuiteConfig c = config;
    const std::string slug = group ? "wo_" + std::string(to_string(*group)) : std::string("full");
    c.label = std::string(label);
    c.agent.ablation = config.agent.ablation;
    if (group) c.agent.ablation.insert(*group);
    c.out = config.out / slug;
    if (c.backend.starts_with("replay:")) c.backend = "replay:" + (fs::path(config.backend.substr(7)) / slug).string();
    spdlog::info("ablation row '{}'", label);
    reports.push_back(run_suite(c));
  }
  write_file(config.out / "table.txt", ablation_table(reports));
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) rows.push_back(nlohmann::json::parse(r.json()));
  write_file(config.out / "ablations.json", rows.dump(2) + "\n");
  return reports;
}

std::string metrics_table(const std::vector<SuiteReport>& reports) {
  std::string out = fmt::format("{:<36}{:>8}{:>8}{:>8}{:>8}{:>8}\n", "Method", "TL", "NE", "OSR", "SR", "SPL");
  for (const auto& r : reports)
    out += fmt::format("{:<36}{:>8.2f}{:>8.2f}{:>8.1f}{:>8.1f}{:>8.1f}\n", r.label, r.tl, r.ne, r.osr, r.sr, r.spl);
  return out;
}

std::string ablation_table(const std::vector<SuiteReport>& reports) {
  std::string out = fmt::format("{:<36}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}\n", "Method", "TL", "NE", "OSR",
                                "SR", "SPL", "IA", "VP", "CE", "DT");
  for (const auto& r : reports)
    out += fmt::format("{:<36}{:>8.2f}{:>8.2f}{:>8.1f}{:>8.1f}{:>8.1f}{:>8}{:>8}{:>8}{:>8}\n", r.label, r.tl, r.ne,
                       r.osr, r.sr, r.spl, r.calls_to(ExpertGroup::instruction_analysis),
                       r.calls_to(ExpertGroup::vision_perception), r.calls_to(ExpertGroup::completion_estimation),
                       r.calls_to(ExpertGroup::decision_testing));
  out += "\nIA/VP/CE/DT: calls to the instruction analysis, vision perception, completion estimation and decision\n"
         "testing experts.\n\n";
  if (!reports.empty()) {
    out += fmt::format("{:<36}{:>8}{:>10}\n", "Method", "SR", "SR diff");
    for (const auto& r : reports)
      out += fmt::format("{:<36}{:>8.1f}{:>+10.1f}\n", r.label, r.sr, r.sr - reports.front().sr);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

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

std::vector<ScriptedBackend::Rule> oracle_rules(const EnvGraph& world, const std::vector<Episode>& episodes) {
  using Rule = ScriptedBackend::Rule;
  std::vector<Rule> rules;
  OracleBackend oracle(world, episodes);

  for (const auto& ep : episodes) {
    const std::string ask = "the instruction " + ep.instruction + "?";
    rules.push_back({RoleId::action_decomposition, {"Can you decompose actions in " + ask},
                     {numbered(synthetic::decompose(ep.instruction))}});
    std::string lm = "Corrected actions: none\nLandmarks:\n";
    const auto lms = synthetic::landmarks(ep.instruction);
    for (std::size_t i = 0; i < lms.size(); ++i)
      lm += fmt::format("{}. {} ({})\n", i + 1, lms[i].phrase, to_string(lms[i].kind));
    if (lms.empty()) lm += "none\n";
    rules.push_back({RoleId::landmark_extraction, {"Can you extract landmarks in " + ask}, {lm}});

    const auto actions = synthetic::decompose(ep.instruction);
    const auto& ref = ep.reference_path;
    for (const auto& [vp, pos] : world.viewpoints()) {
      const std::vector<std::string> key{"Instruction: " + ep.instruction + "\n", "Current viewpoint: " + vp + "\n"};
      const Prediction truth = oracle.next_move(ep, vp);

      std::size_t progress = 0;
      if (auto it = std::find(ref.begin(), ref.end(), vp); it != ref.end())
        progress = std::min(static_cast<std::size_t>(it - ref.begin()), actions.size() - 1);
      const std::vector<std::string> executed(actions.begin(), actions.begin() + static_cast<long>(progress));
      const std::vector<std::string> waiting(actions.begin() + static_cast<long>(progress) + 1, actions.end());
      rules.push_back({RoleId::completion_estimation, key,
                       {fmt::format("Thought: {} landmarks are behind me.\nPrediction:\nExecuted Actions:\n{}"
                                    "In-progress Actions:\n{}Actions Waiting to be Executed:\n{}",
                                    progress, dashed(executed), dashed({actions[progress]}), dashed(waiting))}});

      const Prediction alt =
          truth.is_stop() ? Prediction::sector(0) : Prediction::sector((truth.sector_id() + 6) % kSectorCount);
      const std::string t = truth.str();
      const std::string a = alt.str();
      rules.push_back(
          {RoleId::navigator,
           key,
           {fmt::format("Thought: The next landmark should be in direction {}.\nPrediction: {}", t, t),
            fmt::format("Thought: Turning back toward {} might retrace the route.\nPrediction: {}", a, a),
            fmt::format("Thought: The instruction points me along {}.\nPrediction: {}", t, t),
            fmt::format("Thought: I am unsure, {} looks open as well.\nPrediction: {}", a, a),
            fmt::format("Thought: Direction {} matches the in-progress action.\nPrediction: {}", t, t)}});
      rules.push_back({RoleId::decision_testing, key,
                       {fmt::format("Thought: Only {} is consistent with the landmarks.\nPrediction: {}", t, t)}});
    }
  }

  for (const auto& [vp, pos] : world.viewpoints()) {
    for (int s = 0; s < kSectorCount; ++s) {
      const std::string key = fmt::format("Observation key: viewpoint {}, direction {}\n", vp, s);
      const Observation* obs = world.observation(vp, s);
      const std::string scene = obs && !obs->scene_text.empty() ? obs->scene_text : "nothing notable";
      rules.push_back({RoleId::scene_observation, {key}, {fmt::format("In direction {} I can see {}.", s, scene)}});
      rules.push_back({RoleId::object_detection,
                       {key},
                       {obs && !obs->object_tags.empty() ? "Tags: " + text::join(obs->object_tags, ", ")
                                                         : std::string("Tags: none")}});
    }
  }

  rules.push_back({RoleId::trajectory_summary, {}, {"The agent has moved along the route described so far."}});
  rules.push_back({RoleId::thought_fusion, {}, {"Fused thought: the samples share one reasoning about this direction."}});
  return rules;
}

void generate_fixtures(const FixtureOptions& o, const fs::path& dir) {
  if (o.n_envs < 1 || o.episodes_per_env < 1) throw std::invalid_argument("fixture counts must be >= 1");
  json envs = json::array();
  int total = 0;
  for (int i = 0; i < o.n_envs; ++i) {
    const std::string name = fmt::format("env_{:03}", i);
    SyntheticWorld w = generate_synthetic_world(o.seed * 1000003ULL + static_cast<std::uint64_t>(i), o.n_viewpoints,
                                                o.episodes_per_env);
    save_world(w.graph, dir / name / "world.json");
    save_episodes(w.episodes, dir / name / "episodes.jsonl");
    ScriptedBackend scripted(oracle_rules(w.graph, w.episodes), o.seed);
    write_file(dir / name / "scripted.json", scripted.serialize());
    envs.push_back({{"name", name},
                    {"world", name + "/world.json"},
                    {"episodes", name + "/episodes.jsonl"},
                    {"scripted", name + "/scripted.json"},
                    {"n_episodes", w.episodes.size()}});
    total += static_cast<int>(w.episodes.size());
  }
  json manifest{{"seed", o.seed},
                {"n_envs", o.n_envs},
                {"episodes_per_env", o.episodes_per_env},
                {"n_viewpoints", o.n_viewpoints},
                {"total_episodes", total},
                {"envs", envs}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace discussnav
