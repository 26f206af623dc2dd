#include <cstdlib>

#include "duplex/extraction.hpp"
#include "httplib.h"
#include "json.hpp"

namespace duplex {

namespace {

std::string env_or(const std::string& name, const std::string& fallback_name, std::string fallback) {
  if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') return v;
  if (const char* v = std::getenv(fallback_name.c_str()); v != nullptr && *v != '\0') return v;
  return fallback;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw EndpointError("endpoint URL lacks a scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_begin);
  out.path = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

}  // namespace

EndpointConfig EndpointConfig::from_environment(std::string_view prefix) {
  const std::string p = "DUPLEX_" + std::string(prefix) + "_";
  EndpointConfig cfg;
  cfg.base_url = env_or(p + "BASE_URL", "DUPLEX_BASE_URL", cfg.base_url);
  cfg.model = env_or(p + "MODEL", "DUPLEX_MODEL", cfg.model);
  cfg.api_key = env_or(p + "API_KEY", "DUPLEX_API_KEY", cfg.api_key);
  return cfg;
}

std::string chat_complete(const EndpointConfig& endpoint, const std::string& system_prompt,
                          const std::string& user_prompt) {
  const SplitUrl url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  if (!client.is_valid()) throw EndpointError("unsupported endpoint URL: " + endpoint.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  nlohmann::json body = {
      {"model", endpoint.model},
      {"temperature", 0},
      {"messages",
       {{{"role", "system"}, {"content", system_prompt}}, {{"role", "user"}, {"content", user_prompt}}}}};
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

  auto res = client.Post(url.path + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw EndpointError("request to " + endpoint.base_url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EndpointError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw EndpointError(std::string("unexpected completion payload: ") + e.what());
  }
}

std::string first_fenced_block(std::string_view reply) {
  const auto open = reply.find("```");
  if (open == std::string_view::npos) return std::string(reply);
  // Skip an info string such as ```json.
  auto body = reply.find('\n', open + 3);
  if (body == std::string_view::npos) return std::string(reply);
  ++body;
  const auto close = reply.find("```", body);
  if (close == std::string_view::npos) return std::string(reply.substr(body));
  return std::string(reply.substr(body, close - body));
}

std::string LiveExtractor::extract(const ExtractionTask& task, const std::string& guide) const {
  return first_fenced_block(chat_complete(endpoint_, guide, task.text));
}

}  // namespace duplex
