#include "discussnav/remote_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace discussnav {

using nlohmann::json;

RemoteConfig RemoteConfig::from_env(const std::string& model) {
  RemoteConfig c;
  const char* key = std::getenv(kApiKeyEnv);
  if (key == nullptr || *key == '\0')
    throw BackendError(BackendErrorKind::config, std::string("remote backend needs the ") + kApiKeyEnv +
                                                     " environment variable");
  c.api_key = key;
  if (const char* url = std::getenv(kApiUrlEnv); url != nullptr && *url != '\0') c.url = url;
  if (!model.empty()) c.default_model = model;
  return c;
}

const std::string& RemoteConfig::model_for(RoleId role) const {
  auto it = models.find(role);
  return it == models.end() ? default_model : it->second;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.api_key.empty()) throw BackendError(BackendErrorKind::config, "remote backend has no credential");
  const auto scheme = config_.url.find("://");
  if (scheme == std::string::npos) throw BackendError(BackendErrorKind::config, "bad endpoint URL '" + config_.url + "'");
  const auto slash = config_.url.find('/', scheme + 3);
  scheme_host_port_ = config_.url.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : config_.url.substr(slash);
}

std::string RemoteBackend::request_body(const std::string& model, const CompletionRequest& request, int n) {
  json body;
  body["model"] = model;
  body["messages"] = json::array();
  for (const auto& m : request.messages)
    body["messages"].push_back({{"role", to_string(m.speaker)}, {"content", m.content}});
  body["temperature"] = request.sampling.diversity;
  body["n"] = n;
  return body.dump();
}

std::vector<std::string> RemoteBackend::parse_response_body(const std::string& body) {
  try {
    json j = json::parse(body);
    std::vector<std::string> out;
    for (const auto& choice : j.at("choices")) out.push_back(choice.at("message").at("content").get<std::string>());
    return out;
  } catch (const json::exception& e) {
    throw BackendError(BackendErrorKind::transport, std::string("malformed completion response: ") + e.what());
  }
}

CompletionResult RemoteBackend::complete(const CompletionRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

  CompletionResult result;
  result.backend_id = id();
  const auto t0 = std::chrono::steady_clock::now();
  // Some endpoints cap n; top up until breadth completions arrived.
  for (int round = 0; round < request.sampling.breadth; ++round) {
    const int missing = request.sampling.breadth - static_cast<int>(result.completions.size());
    if (missing <= 0) break;
    auto res = client.Post(path_, headers, request_body(config_.model_for(request.role), request, missing),
                           "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
        throw BackendError(BackendErrorKind::timeout, httplib::to_string(err));
      throw BackendError(BackendErrorKind::transport, httplib::to_string(err));
    }
    if (res->status == 429) throw BackendError(BackendErrorKind::rate_limit, "HTTP 429");
    if (res->status == 408 || res->status == 504)
      throw BackendError(BackendErrorKind::timeout, "HTTP " + std::to_string(res->status));
    if (res->status >= 500) throw BackendError(BackendErrorKind::transport, "HTTP " + std::to_string(res->status));
    if (res->status != 200)
      throw BackendError(BackendErrorKind::invalid_request, "HTTP " + std::to_string(res->status) + ": " + res->body);
    auto choices = parse_response_body(res->body);
    if (choices.empty()) throw BackendError(BackendErrorKind::transport, "completion response without choices");
    for (auto& c : choices)
      if (static_cast<int>(result.completions.size()) < request.sampling.breadth) result.completions.push_back(std::move(c));
  }
  result.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace discussnav
