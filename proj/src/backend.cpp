#include "discussnav/backend.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "discussnav/digest.hpp"

namespace discussnav {

using nlohmann::json;

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::transport: return "transport";
    case BackendErrorKind::timeout: return "timeout";
    case BackendErrorKind::rate_limit: return "rate_limit";
    case BackendErrorKind::transcript_exhausted: return "transcript_exhausted";
    case BackendErrorKind::digest_mismatch: return "digest_mismatch";
    case BackendErrorKind::unknown_episode: return "unknown_episode";
    case BackendErrorKind::no_rule: return "no_rule";
    case BackendErrorKind::invalid_request: return "invalid_request";
    case BackendErrorKind::config: return "config";
    case BackendErrorKind::write_failure: return "write_failure";
  }
  return "transport";
}

std::string request_digest(const CompletionRequest& request) {
  json j;
  j["role"] = to_string(request.role);
  j["messages"] = json::array();
  for (const auto& m : request.messages) j["messages"].push_back({to_string(m.speaker), m.content});
  j["diversity"] = request.sampling.diversity;
  j["breadth"] = request.sampling.breadth;
  return sha256_hex(j.dump());
}

CompletionResult complete(Backend& backend, const CompletionRequest& request, const RetryPolicy& policy) {
  if (request.messages.empty()) throw BackendError(BackendErrorKind::invalid_request, "request has no messages");
  if (request.sampling.breadth < 1) throw BackendError(BackendErrorKind::invalid_request, "breadth must be >= 1");
  auto backoff = policy.initial_backoff;
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      CompletionResult result = backend.complete(request);
      if (result.completions.size() != static_cast<std::size_t>(request.sampling.breadth))
        throw BackendError(BackendErrorKind::invalid_request,
                           "backend returned " + std::to_string(result.completions.size()) + " completions, expected " +
                               std::to_string(request.sampling.breadth));
      if (result.latency_ms == 0.0)
        result.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (result.backend_id.empty()) result.backend_id = backend.id();
      return result;
    } catch (const BackendError& e) {
      if (!e.transient() || attempt >= attempts) throw;
      if (policy.sleep)
        policy.sleep(backoff);
      else
        std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
  }
}

// ---------------------------------------------------------------------------
// Scripted

ScriptedBackend::ScriptedBackend(std::vector<Rule> rules, std::uint64_t seed)
    : rules_(std::move(rules)), seed_(seed) {
  for (const auto& r : rules_)
    if (r.responses.empty()) throw BackendError(BackendErrorKind::config, "scripted rule without responses");
}

ScriptedBackend ScriptedBackend::parse(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw BackendError(BackendErrorKind::config, std::string("scripted backend file: ") + e.what());
  }
  std::vector<Rule> rules;
  try {
    for (const auto& r : root.at("rules")) {
      Rule rule;
      if (r.contains("role")) {
        auto role = parse_role(r.at("role").get<std::string>());
        if (!role) throw BackendError(BackendErrorKind::config, "unknown role '" + r.at("role").get<std::string>() + "'");
        rule.role = role;
      }
      rule.contains = r.value("contains", std::vector<std::string>{});
      rule.responses = r.at("responses").get<std::vector<std::string>>();
      rules.push_back(std::move(rule));
    }
    return ScriptedBackend(std::move(rules), root.value("seed", std::uint64_t{0}));
  } catch (const json::exception& e) {
    throw BackendError(BackendErrorKind::config, std::string("scripted backend file: ") + e.what());
  }
}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError(BackendErrorKind::config, "cannot open scripted backend file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ScriptedBackend::serialize() const {
  json root;
  root["seed"] = seed_;
  root["rules"] = json::array();
  for (const auto& r : rules_) {
    json j;
    if (r.role) j["role"] = to_string(*r.role);
    j["contains"] = r.contains;
    j["responses"] = r.responses;
    root["rules"].push_back(std::move(j));
  }
  return root.dump(1) + "\n";
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& request) {
  std::string user;
  for (const auto& m : request.messages)
    if (m.speaker == Speaker::user) user += m.content + "\n";
  for (const auto& rule : rules_) {
    if (rule.role && *rule.role != request.role) continue;
    if (!std::all_of(rule.contains.begin(), rule.contains.end(),
                     [&](const std::string& frag) { return user.find(frag) != std::string::npos; }))
      continue;
    std::size_t offset = 0;
    if (request.sampling.diversity > 0.0 && rule.responses.size() > 1) {
      const std::string digest = request_digest(request);
      std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                        static_cast<std::uint32_t>(std::stoul(digest.substr(0, 8), nullptr, 16))};
      std::mt19937_64 rng(seq);
      offset = std::uniform_int_distribution<std::size_t>(0, rule.responses.size() - 1)(rng);
    }
    CompletionResult result;
    result.backend_id = id();
    for (int i = 0; i < request.sampling.breadth; ++i)
      result.completions.push_back(rule.responses[(offset + static_cast<std::size_t>(i)) % rule.responses.size()]);
    return result;
  }
  throw BackendError(BackendErrorKind::no_rule,
                     "no scripted rule for role '" + std::string(to_string(request.role)) + "'");
}

// ---------------------------------------------------------------------------
// Transcripts

std::string serialize_record(const TranscriptRecord& record) {
  json j{{"digest", record.digest},
         {"role", to_string(record.role)},
         {"completions", record.completions},
         {"meta",
          {{"world", record.meta.world},
           {"episode", record.meta.episode},
           {"seed", record.meta.seed},
           {"prompts", record.meta.prompts}}}};
  return j.dump();
}

TranscriptRecord parse_record(const std::string& line) {
  try {
    json j = json::parse(line);
    TranscriptRecord r;
    r.digest = j.at("digest").get<std::string>();
    auto role = parse_role(j.at("role").get<std::string>());
    if (!role) throw BackendError(BackendErrorKind::config, "transcript record with unknown role");
    r.role = *role;
    r.completions = j.at("completions").get<std::vector<std::string>>();
    if (j.contains("meta")) {
      const json& m = j["meta"];
      r.meta.world = m.value("world", "");
      r.meta.episode = m.value("episode", "");
      r.meta.seed = m.value("seed", std::uint64_t{0});
      r.meta.prompts = m.value("prompts", "");
    }
    return r;
  } catch (const json::exception& e) {
    throw BackendError(BackendErrorKind::config, std::string("bad transcript record: ") + e.what());
  }
}

ReplayBackend::ReplayBackend(std::vector<TranscriptRecord> records)
    : records_(std::move(records)), consumed_(records_.size(), false) {}

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError(BackendErrorKind::config, "cannot open transcript '" + path.string() + "'");
  std::vector<TranscriptRecord> records;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) records.push_back(parse_record(line));
  return records;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& path) : ReplayBackend(load_transcript(path)) {}

CompletionResult ReplayBackend::complete(const CompletionRequest& request) {
  const std::string digest = request_digest(request);
  std::lock_guard lock(mu_);
  bool any_left = false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (consumed_[i]) continue;
    any_left = true;
    if (records_[i].digest != digest) continue;
    consumed_[i] = true;
    CompletionResult result;
    result.completions = records_[i].completions;
    result.backend_id = id();
    return result;
  }
  if (!any_left) throw BackendError(BackendErrorKind::transcript_exhausted, "transcript has no records left");
  throw BackendError(BackendErrorKind::digest_mismatch,
                     "no recorded exchange for " + std::string(to_string(request.role)) + " request " + digest.substr(0, 12));
}

std::size_t ReplayBackend::remaining() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

RecordingBackend::RecordingBackend(Backend& inner, const std::filesystem::path& sink, TranscriptMeta meta)
    : inner_(inner), meta_(std::move(meta)), path_(sink) {
  if (sink.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(sink.parent_path(), ec);
  }
  out_.open(sink, std::ios::binary | std::ios::trunc);
  if (!out_) throw BackendError(BackendErrorKind::write_failure, "cannot write transcript '" + sink.string() + "'");
}

CompletionResult RecordingBackend::complete(const CompletionRequest& request) {
  CompletionResult result = inner_.complete(request);
  TranscriptRecord rec{request_digest(request), request.role, result.completions, meta_};
  std::lock_guard lock(mu_);
  out_ << serialize_record(rec) << '\n';
  out_.flush();
  if (!out_) throw BackendError(BackendErrorKind::write_failure, "write to '" + path_.string() + "' failed");
  return result;
}

std::unique_ptr<RecordingBackend> record(Backend& inner, const std::filesystem::path& sink, TranscriptMeta meta) {
  return std::make_unique<RecordingBackend>(inner, sink, std::move(meta));
}

}  // namespace discussnav
