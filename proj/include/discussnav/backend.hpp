#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "discussnav/roster.hpp"

namespace discussnav {

struct CompletionRequest {
  RoleId role = RoleId::navigator;
  std::vector<Message> messages;
  SamplingProfile sampling;
};

/// Stable SHA-256 over (role, messages, sampling).
std::string request_digest(const CompletionRequest& request);

struct CompletionResult {
  std::vector<std::string> completions;
  double latency_ms = 0.0;
  std::string backend_id;
};

enum class BackendErrorKind {
  transport,
  timeout,
  rate_limit,
  transcript_exhausted,
  digest_mismatch,
  unknown_episode,
  no_rule,
  invalid_request,
  config,
  write_failure,
};

std::string_view to_string(BackendErrorKind kind);

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  BackendErrorKind kind() const { return kind_; }
  /// Transport failures, timeouts and rate limits are worth retrying.
  bool transient() const {
    return kind_ == BackendErrorKind::transport || kind_ == BackendErrorKind::timeout ||
           kind_ == BackendErrorKind::rate_limit;
  }

 private:
  BackendErrorKind kind_;
};

/// Uniform completion interface. Implementations must accept concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  /// Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Validates the request, calls the backend, retries transient failures with
/// exponential backoff and checks that exactly `breadth` completions came back.
CompletionResult complete(Backend& backend, const CompletionRequest& request, const RetryPolicy& policy = {});

// ---------------------------------------------------------------------------

/// Table-driven backend. The first rule whose role matches and whose `contains`
/// fragments all occur in the last user message answers. With diversity > 0 the
/// response list is rotated by an offset derived from (seed, request digest).
class ScriptedBackend : public Backend {
 public:
  struct Rule {
    std::optional<RoleId> role;
    std::vector<std::string> contains;
    std::vector<std::string> responses;
  };

  explicit ScriptedBackend(std::vector<Rule> rules, std::uint64_t seed = 0);
  static ScriptedBackend load(const std::filesystem::path& path);
  static ScriptedBackend parse(const std::string& json_text);
  std::string serialize() const;

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "scripted"; }

  const std::vector<Rule>& rules() const { return rules_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<Rule> rules_;
  std::uint64_t seed_;
};

struct TranscriptMeta {
  std::string world;
  std::string episode;
  std::uint64_t seed = 0;
  std::string prompts;  // prompt-pack checksum

  friend bool operator==(const TranscriptMeta&, const TranscriptMeta&) = default;
};

struct TranscriptRecord {
  std::string digest;
  RoleId role = RoleId::navigator;
  std::vector<std::string> completions;
  TranscriptMeta meta;
};

std::string serialize_record(const TranscriptRecord& record);
TranscriptRecord parse_record(const std::string& line);

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path);

/// Serves recorded completions. A request consumes the earliest unconsumed record
/// with the same digest, so concurrent arrival order does not matter.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::vector<TranscriptRecord> records);
  explicit ReplayBackend(const std::filesystem::path& transcript);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "replay"; }

  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
  std::vector<bool> consumed_;
};

/// Wraps another backend and appends every successful exchange to a transcript.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(Backend& inner, const std::filesystem::path& sink, TranscriptMeta meta);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "record(" + inner_.id() + ")"; }

 private:
  Backend& inner_;
  TranscriptMeta meta_;
  std::mutex mu_;
  std::ofstream out_;
  std::filesystem::path path_;
};

std::unique_ptr<RecordingBackend> record(Backend& inner, const std::filesystem::path& sink, TranscriptMeta meta);

}  // namespace discussnav
