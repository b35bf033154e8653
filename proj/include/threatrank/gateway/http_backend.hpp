#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "threatrank/gateway/gateway.hpp"

namespace threatrank::gateway {

// Chat-completion-style HTTP backend. Endpoint and credential come from the
// environment:
//   THREATRANK_BACKEND_URL   e.g. http://host:port  (path fixed below)
//   THREATRANK_BACKEND_KEY   bearer token, optional
//   THREATRANK_BACKEND_MODEL model name, optional
class HttpBackend final : public CompletionBackend {
 public:
  HttpBackend() {
    const char* url = std::getenv("THREATRANK_BACKEND_URL");
    if (!url) throw BackendUnavailable("THREATRANK_BACKEND_URL is not set");
    base_url_ = url;
    if (const char* key = std::getenv("THREATRANK_BACKEND_KEY")) key_ = key;
    if (const char* model = std::getenv("THREATRANK_BACKEND_MODEL")) model_ = model;
  }

  std::string id() const override { return "http:" + model_; }

  std::string complete(const RenderedPrompt& prompt) override {
    json body{{"model", model_},
              {"temperature", temperature_for(prompt.template_id)},
              {"messages", json::array({json{{"role", "system"}, {"content", prompt.system_text}},
                                        json{{"role", "user"}, {"content", prompt.user_text}}})}};
    httplib::Client client(base_url_);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw BackendUnavailable("backend unreachable: " + base_url_);
    if (res->status == 429) {
      double retry_after = 1.0;
      if (res->has_header("Retry-After"))
        retry_after = std::max(0.0, std::atof(res->get_header_value("Retry-After").c_str()));
      throw RateLimited("backend rate limited", retry_after);
    }
    if (res->status != 200)
      throw BackendUnavailable("backend returned status " + std::to_string(res->status));
    auto doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
      throw BackendUnavailable("backend response missing choices");
    return doc["choices"][0]["message"]["content"].get<std::string>();
  }

 private:
  std::string base_url_;
  std::string key_;
  std::string model_ = "default";
};

}  // namespace threatrank::gateway
