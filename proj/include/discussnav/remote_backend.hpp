#pragma once

#include <chrono>
#include <map>
#include <string>

#include "discussnav/backend.hpp"

namespace discussnav {

inline constexpr const char* kApiKeyEnv = "DISCUSSNAV_API_KEY";
inline constexpr const char* kApiUrlEnv = "DISCUSSNAV_API_URL";
inline constexpr const char* kDefaultApiUrl = "https://api.openai.com/v1/chat/completions";

struct RemoteConfig {
  std::string url = kDefaultApiUrl;
  std::string api_key;
  std::string default_model = "gpt-4";
  std::map<RoleId, std::string> models;  // per-role overrides
  std::chrono::seconds timeout{60};

  /// Reads the credential (and optionally the URL) from the environment.
  /// Throws BackendError(config) when the credential is absent.
  static RemoteConfig from_env(const std::string& model);
  const std::string& model_for(RoleId role) const;
};

/// OpenAI-style chat-completion client:
///   POST {model, messages: [{role, content}], temperature, n}
///   -> {choices: [{message: {content}}]}
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "remote"; }

  /// Request body for one call (exposed for wire-format tests).
  static std::string request_body(const std::string& model, const CompletionRequest& request, int n);
  /// Extracts choice contents; throws BackendError(transport) on a malformed body.
  static std::vector<std::string> parse_response_body(const std::string& body);

 private:
  RemoteConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace discussnav
