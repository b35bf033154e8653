#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "threatrank/common/digest.hpp"
#include "threatrank/gateway/schemas.hpp"
#include "threatrank/gateway/templates.hpp"

namespace threatrank::gateway {

struct GatewayError : std::runtime_error {
  explicit GatewayError(const std::string& what) : std::runtime_error(what) {}
};
struct UnboundPlaceholder : GatewayError {
  explicit UnboundPlaceholder(const std::string& what) : GatewayError(what) {}
};
struct BackendUnavailable : GatewayError {
  explicit BackendUnavailable(const std::string& what) : GatewayError(what) {}
};
struct FixtureMiss : BackendUnavailable {
  explicit FixtureMiss(const std::string& what) : BackendUnavailable(what) {}
};
struct SchemaViolation : GatewayError {
  std::vector<std::string> errors;
  SchemaViolation(const std::string& what, std::vector<std::string> errs)
      : GatewayError(what), errors(std::move(errs)) {}
};
struct RateLimited : GatewayError {
  double retry_after_seconds;
  RateLimited(const std::string& what, double retry_after)
      : GatewayError(what), retry_after_seconds(retry_after) {}
};

struct RenderedPrompt {
  TemplateId template_id = TemplateId::disentangle;
  std::string template_version;
  SchemaId schema = SchemaId::disentangle;
  json schema_params = json::object();
  std::string system_text;
  std::string user_text;

  std::string digest() const {
    return sha256_hex(to_string(template_id) + "\x1e" + system_text + "\x1e" + user_text);
  }
};

using Bindings = std::map<std::string, std::string>;

namespace render_detail {

// Placeholders are {UPPER_SNAKE} tokens; literal JSON braces in template
// bodies never match this shape.
inline bool is_placeholder_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

inline std::string substitute(const std::string& text, const Bindings& bindings) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{' && i + 1 < text.size() && text[i + 1] >= 'A' && text[i + 1] <= 'Z') {
      std::size_t j = i + 1;
      while (j < text.size() && is_placeholder_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}') {
        std::string name = text.substr(i + 1, j - i - 1);
        auto it = bindings.find(name);
        if (it == bindings.end())
          throw UnboundPlaceholder("placeholder {" + name + "} is unbound");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

}  // namespace render_detail

// Deterministic: the same template and bindings yield byte-identical prompts.
inline RenderedPrompt render(TemplateId id, const Bindings& bindings,
                             json schema_params = json::object()) {
  const auto& tpl = template_for(id);
  RenderedPrompt p;
  p.template_id = id;
  p.template_version = tpl.version;
  p.schema = tpl.response_schema;
  p.schema_params = std::move(schema_params);
  p.system_text = render_detail::substitute(tpl.system_text, bindings);
  p.user_text = render_detail::substitute(tpl.user_text, bindings);
  return p;
}

// Classification templates run at the backend's most deterministic setting.
inline double temperature_for(TemplateId id) {
  switch (id) {
    case TemplateId::forecast:
    case TemplateId::mitigation_prioritize:
      return 0.2;
    default:
      return 0.0;
  }
}

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string id() const = 0;
  // Returns raw response text; throws BackendUnavailable / RateLimited.
  virtual std::string complete(const RenderedPrompt& prompt) = 0;
};

// Offline backend: responses are fixture files named by the digest of the
// rendered prompt. Optionally records pending prompts on a miss so fixtures
// can be authored.
class StubBackend final : public CompletionBackend {
 public:
  explicit StubBackend(std::filesystem::path fixture_dir, bool record_pending = false)
      : dir_(std::move(fixture_dir)), record_pending_(record_pending) {}

  std::string id() const override { return "stub"; }

  std::string complete(const RenderedPrompt& prompt) override {
    auto path = dir_ / (prompt.digest() + ".json");
    std::ifstream in(path);
    if (!in.good()) {
      if (record_pending_) {
        std::filesystem::create_directories(dir_);
        std::ofstream out(dir_ / (prompt.digest() + ".pending.json"));
        out << json{{"template", to_string(prompt.template_id)},
                    {"system", prompt.system_text},
                    {"user", prompt.user_text}}
                   .dump(2)
            << "\n";
      }
      throw FixtureMiss("no fixture for prompt digest " + prompt.digest() + " (template " +
                        to_string(prompt.template_id) + ")");
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
  }

 private:
  std::filesystem::path dir_;
  bool record_pending_;
};

// Canned in-memory backend for tests.
class ScriptedBackend final : public CompletionBackend {
 public:
  std::string id() const override { return "scripted"; }
  void set(const std::string& digest, std::string response) {
    responses_[digest] = {std::move(response)};
  }
  void set_sequence(const std::string& digest, std::vector<std::string> responses) {
    responses_[digest] = std::move(responses);
  }
  void set_default(std::string response) { default_response_ = std::move(response); }
  std::string complete(const RenderedPrompt& prompt) override {
    auto it = responses_.find(prompt.digest());
    if (it == responses_.end() || it->second.empty()) {
      if (default_response_) return *default_response_;
      throw BackendUnavailable("scripted backend has no response for " + prompt.digest());
    }
    auto text = it->second.front();
    if (it->second.size() > 1) it->second.erase(it->second.begin());
    return text;
  }

 private:
  std::map<std::string, std::vector<std::string>> responses_;
  std::optional<std::string> default_response_;
};

struct CompletionRequest {
  RenderedPrompt prompt;
  double temperature = 0.0;
};

struct CompletionResult {
  json document;
  std::string raw_text;
  std::string backend_id;
  std::int64_t latency_ms = 0;
  bool retried = false;
};

struct CallRecord {
  std::string template_id;
  std::string inputs_digest;
  std::string backend_id;
  bool ok = false;
  std::string error;
};

struct GatewayOptions {
  int max_in_flight = 4;
  int rate_limit_retries = 1;
};

// All model traffic flows through here: prompts are rendered from versioned
// templates, responses must validate against the declared schema (one bounded
// re-ask with the validation errors appended, then hard failure), and every
// call is logged with the prompt digest.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<CompletionBackend> backend, GatewayOptions opts = {})
      : backend_(std::move(backend)),
        opts_(opts),
        slots_(std::max(1, opts.max_in_flight)) {
    if (!backend_) throw GatewayError("no backend configured");
  }

  std::string backend_id() const { return backend_->id(); }

  CompletionResult complete_structured(const CompletionRequest& request) {
    auto start = std::chrono::steady_clock::now();
    auto finish_ms = [&] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::steady_clock::now() - start)
          .count();
    };

    std::string raw = call_backend(request.prompt);
    auto doc = try_parse(raw);
    auto errors = doc ? validate_schema(request.prompt.schema, *doc, request.prompt.schema_params)
                      : std::vector<std::string>{"response is not valid JSON"};
    bool retried = false;
    if (!errors.empty()) {
      retried = true;
      RenderedPrompt repair = request.prompt;
      repair.user_text += "\n\nThe previous response failed validation:\n";
      for (const auto& e : errors) repair.user_text += "- " + e + "\n";
      repair.user_text += "Return a corrected JSON document only.";
      raw = call_backend(repair);
      doc = try_parse(raw);
      errors = doc ? validate_schema(request.prompt.schema, *doc, request.prompt.schema_params)
                   : std::vector<std::string>{"response is not valid JSON"};
      if (!errors.empty()) {
        log(request.prompt, false, "schema violation after re-ask");
        std::string what = "schema violation after one re-ask (" +
                           to_string(request.prompt.schema) + ")";
        throw SchemaViolation(what, errors);
      }
    }
    log(request.prompt, true, {});
    CompletionResult result;
    result.document = *doc;
    result.raw_text = raw;
    result.backend_id = backend_->id();
    result.latency_ms = finish_ms();
    result.retried = retried;
    return result;
  }

  const std::vector<CallRecord>& call_log() const { return log_; }

 private:
  static std::optional<json> try_parse(const std::string& text) {
    auto doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
  }

  std::string call_backend(const RenderedPrompt& prompt) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    int rate_retries = opts_.rate_limit_retries;
    for (;;) {
      try {
        return backend_->complete(prompt);
      } catch (const RateLimited& rl) {
        if (rate_retries-- <= 0) {
          log(prompt, false, "rate limited");
          throw;
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(rl.retry_after_seconds));
      } catch (const BackendUnavailable& e) {
        log(prompt, false, e.what());
        throw;
      }
    }
  }

  void log(const RenderedPrompt& prompt, bool ok, const std::string& error) {
    std::lock_guard<std::mutex> lock(log_mutex_);
    log_.push_back({to_string(prompt.template_id), prompt.digest(), backend_->id(), ok, error});
  }

  std::shared_ptr<CompletionBackend> backend_;
  GatewayOptions opts_;
  std::counting_semaphore<> slots_;
  std::mutex log_mutex_;
  std::vector<CallRecord> log_;
};

// Writes a stub fixture for a prompt: the file a StubBackend will serve.
inline void write_stub_fixture(const std::filesystem::path& fixture_dir,
                               const RenderedPrompt& prompt, const json& response) {
  std::filesystem::create_directories(fixture_dir);
  std::ofstream out(fixture_dir / (prompt.digest() + ".json"));
  out << response.dump(2) << "\n";
}

}  // namespace threatrank::gateway
