#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "discussnav/harness.hpp"

using namespace discussnav;

namespace {

struct Options {
  std::vector<std::string> worlds;
  std::vector<std::string> episodes;
  std::string fixtures;
  std::string backend = "oracle";
  std::uint64_t seed = 0;
  int n_samples = kDecisionSampling.breadth;
  int max_steps = 15;
  int retry_limit = 2;
  std::vector<std::string> ablate;
  std::string out = "out";
  int parallel = 1;
  std::string config;
  std::string prompts;
  std::string transcripts;
  bool verbose = false;
};

void add_suite_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--world", o.worlds, "World file (repeatable, paired with --episodes)");
  cmd->add_option("--episodes", o.episodes, "Episode file (repeatable)");
  cmd->add_option("--fixtures", o.fixtures, "Directory written by gen-fixtures");
  cmd->add_option("--backend", o.backend, "scripted | scripted:<file> | replay:<dir> | oracle | remote:<model>");
  cmd->add_option("--seed", o.seed);
  cmd->add_option("--n-samples", o.n_samples, "Decision samples per step");
  cmd->add_option("--max-steps", o.max_steps);
  cmd->add_option("--retry-limit", o.retry_limit, "Re-asks after a malformed reply");
  cmd->add_option("--ablate", o.ablate, "Disable an expert group (repeatable)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--parallel", o.parallel, "Episodes run at once");
  cmd->add_option("--config", o.config, "JSON config file; its keys override flags");
  cmd->add_option("--prompts", o.prompts, "Prompt pack directory");
  cmd->add_flag("-v,--verbose", o.verbose);
}

void apply_config_file(Options& o) {
  if (o.config.empty()) return;
  std::ifstream in(o.config);
  if (!in) throw std::invalid_argument("cannot read config file " + o.config);
  const auto j = nlohmann::json::parse(in);
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("world", o.worlds);
  take("episodes", o.episodes);
  take("fixtures", o.fixtures);
  take("backend", o.backend);
  take("seed", o.seed);
  take("n_samples", o.n_samples);
  take("max_steps", o.max_steps);
  take("retry_limit", o.retry_limit);
  take("ablate", o.ablate);
  take("out", o.out);
  take("parallel", o.parallel);
  take("prompts", o.prompts);
}

SuiteConfig suite_config(Options o) {
  apply_config_file(o);
  SuiteConfig c;
  if (!o.fixtures.empty()) c.worlds = fixture_worlds(o.fixtures);
  if (o.worlds.size() != o.episodes.size()) throw std::invalid_argument("--world and --episodes must pair up");
  for (std::size_t i = 0; i < o.worlds.size(); ++i) {
    WorldSpec w;
    w.world = o.worlds[i];
    w.episodes = o.episodes[i];
    w.label = w.world.parent_path().filename().string();
    if (w.label.empty()) w.label = w.world.stem().string();
    if (fs::exists(w.world.parent_path() / "scripted.json")) w.scripted = w.world.parent_path() / "scripted.json";
    c.worlds.push_back(std::move(w));
  }
  if (c.worlds.empty()) throw std::invalid_argument("no worlds given (use --world/--episodes or --fixtures)");
  c.backend = o.transcripts.empty() ? o.backend : "replay:" + o.transcripts;
  c.seed = o.seed;
  c.agent.decision_sampling.breadth = o.n_samples;
  c.agent.max_steps = o.max_steps;
  c.agent.retry_limit = o.retry_limit;
  for (const auto& g : o.ablate) {
    auto group = parse_group(g);
    if (!group) throw std::invalid_argument("unknown expert group '" + g + "'");
    c.agent.ablation.insert(*group);
  }
  c.out = o.out;
  c.parallel = o.parallel;
  if (!o.prompts.empty()) c.prompts = o.prompts;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DiscussNav navigation engine"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Run an episode suite");
  add_suite_flags(run, o);
  auto* ablate = app.add_subcommand("ablate", "Run the full pipeline and one suite per disabled expert group");
  add_suite_flags(ablate, o);
  auto* rec = app.add_subcommand("record", "Run a suite and write per-episode transcripts");
  add_suite_flags(rec, o);
  auto* replay = app.add_subcommand("replay", "Run a suite from recorded transcripts");
  add_suite_flags(replay, o);
  replay->add_option("--transcripts", o.transcripts, "Output directory of a previous record run")->required();

  FixtureOptions fx;
  std::string fx_out = "fixtures";
  auto* gen = app.add_subcommand("gen-fixtures", "Write generated worlds, episodes and scripted rules");
  gen->add_option("--seed", fx.seed);
  gen->add_option("--envs", fx.n_envs);
  gen->add_option("--episodes-per-env", fx.episodes_per_env);
  gen->add_option("--viewpoints", fx.n_viewpoints);
  gen->add_option("--out", fx_out);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("discussnav"));
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (gen->parsed()) {
      generate_fixtures(fx, fx_out);
      std::cout << "wrote " << fx.n_envs * fx.episodes_per_env << " episodes to " << fx_out << "\n";
      return 0;
    }
    SuiteConfig c = suite_config(o);
    if (rec->parsed()) c.record = true;
    if (ablate->parsed()) {
      const auto reports = run_ablations(c);
      std::cout << ablation_table(reports);
    } else {
      const auto report = run_suite(c);
      std::cout << metrics_table({report});
    }
    return 0;
  } catch (const BackendError& e) {
    spdlog::error("{}", e.what());
    return e.kind() == BackendErrorKind::config ? 2 : 1;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
