#pragma once

// Model access for every agent module: prompt templates, a rule-driven
// scripted backend, and an OpenAI-style chat-completion HTTP client.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "deskagent/error.hpp"
#include "deskagent/sim_env.hpp"

namespace deskagent::llm {

enum class RoleTag { Planner, PlannerCritic, StepCheck, Actor, ActorCritic, RegionChooser };

std::string_view to_string(RoleTag role);
std::optional<RoleTag> role_from_string(std::string_view name);
/// Whether requests for this role carry screenshots.
bool consumes_screenshots(RoleTag role);

struct TextPart {
  std::string text;
};

struct ImagePart {
  env::RenderArtifact artifact;
};

using Part = std::variant<TextPart, ImagePart>;

enum class Speaker { System, User };

struct Message {
  Speaker speaker = Speaker::User;
  std::vector<Part> parts;
};

struct ChatRequest {
  RoleTag role = RoleTag::Planner;
  std::vector<Message> messages;
  int max_tokens = 1024;
  double temperature = 0.0;
};

/// Canonical text form of a screenshot, used wherever an image must be text.
std::string artifact_to_text(const env::RenderArtifact& artifact);

/// Every text part plus the canonical text of every image, in message order.
std::string render_text(const ChatRequest& request);

class MissingContextField : public Error {
 public:
  MissingContextField(std::string_view template_name, const std::string& field)
      : Error("MissingContextField",
              "template '" + std::string(template_name) + "' needs field '" + field + "'"),
        field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// One prompt template: the role it is sent as plus system and user text
/// with {{field}} placeholders.
struct PromptTemplate {
  RoleTag role = RoleTag::Planner;
  std::string system;
  std::string user;
  int images = 0;  // screenshots the template expects
};

/// Named templates. Defaults are built in; a directory may override any of
/// them with <name>.system.txt / <name>.user.txt.
class PromptSet {
 public:
  static PromptSet defaults();
  static PromptSet from_directory(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct PromptContext {
  std::map<std::string, std::string> fields;
  std::vector<env::RenderArtifact> images;
};

/// Expands a named template. Throws MissingContextField for any placeholder
/// without a value or when fewer screenshots than required are supplied.
ChatRequest render_prompt(const PromptSet& prompts, std::string_view template_name,
                          const PromptContext& context);

/// Appends a user message asking the model to fix unparsable output.
void append_reask(ChatRequest& request, std::string_view previous_output, std::string_view problem);

/// Episode-local model handle.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Shareable factory for episode-local backends.
class BackendProvider {
 public:
  virtual ~BackendProvider() = default;
  virtual std::unique_ptr<Backend> open_episode(const std::string& task_id) const = 0;
  virtual std::string describe() const = 0;
};

/// Call-through wrapper tagging every call with its role.
std::string complete(Backend& backend, const ChatRequest& request);

struct ScriptedRule {
  std::optional<RoleTag> role;  // any role when unset
  std::vector<std::string> contains;
  std::vector<std::string> excludes;
  std::string response;
  bool consume_once = false;
};

std::vector<ScriptedRule> rules_from_json(const nlohmann::json& doc);
nlohmann::json rules_to_json(const std::vector<ScriptedRule>& rules);
std::vector<ScriptedRule> load_rules_file(const std::filesystem::path& path);

class NoScriptedMatch : public Error {
 public:
  explicit NoScriptedMatch(RoleTag role)
      : Error("NoScriptedMatch", "no scripted rule matches a " + std::string(to_string(role)) + " request"),
        role_(role) {}
  RoleTag role() const noexcept { return role_; }

 private:
  RoleTag role_;
};

/// First matching, not yet consumed rule wins.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptedRule> rules);
  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScriptedRule> rules_;
  std::vector<bool> consumed_;
  std::size_t calls_ = 0;
};

/// Rules from a single file shared by all tasks, or from a directory holding
/// <task_id>.json per task.
class ScriptedProvider final : public BackendProvider {
 public:
  explicit ScriptedProvider(std::vector<ScriptedRule> rules);
  explicit ScriptedProvider(std::filesystem::path path);
  std::unique_ptr<Backend> open_episode(const std::string& task_id) const override;
  std::string describe() const override;

 private:
  std::optional<std::vector<ScriptedRule>> rules_;
  std::filesystem::path path_;
};

struct HttpConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1
  std::string model;
  std::string api_key;
  int max_tokens = 1024;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
};

/// Reads an optional JSON config file, then applies GATEWAY_ENDPOINT,
/// GATEWAY_MODEL and GATEWAY_KEY overrides.
HttpConfig load_http_config(const std::optional<std::filesystem::path>& file);

class HttpError : public Error {
 public:
  HttpError(int status, std::string body)
      : Error("HttpError", "HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class Timeout : public Error {
 public:
  explicit Timeout(const std::string& message) : Error("Timeout", message) {}
};

/// Chat-completion JSON body for a request.
nlohmann::json build_chat_body(const ChatRequest& request, const HttpConfig& config);

/// Problems with a body relative to the published shape; empty when valid.
std::vector<std::string> validate_chat_body(const nlohmann::json& body);

/// Small 24-bit BMP with one filled box per painted element.
std::string rasterize_placeholder(const env::RenderArtifact& artifact);
std::string base64_encode(std::string_view bytes);

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  HttpConfig config_;
};

class HttpProvider final : public BackendProvider {
 public:
  explicit HttpProvider(HttpConfig config);
  std::unique_ptr<Backend> open_episode(const std::string& task_id) const override;
  std::string describe() const override;

 private:
  HttpConfig config_;
};

}  // namespace deskagent::llm
