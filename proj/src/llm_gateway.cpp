// Scripted backend.

#include <fstream>

#include "deskagent/llm_gateway.hpp"

namespace deskagent::llm {

using nlohmann::json;

std::vector<ScriptedRule> rules_from_json(const json& doc) {
  if (!doc.is_array()) throw ConfigError("scripted rules must be a JSON array");
  std::vector<ScriptedRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& r = doc[i];
    std::string where = "rule " + std::to_string(i);
    if (!r.is_object()) throw ConfigError(where + ": expected object");
    ScriptedRule rule;
    if (r.contains("role") && !r.at("role").is_null()) {
      auto role = role_from_string(r.at("role").get<std::string>());
      if (!role) throw ConfigError(where + ": unknown role");
      rule.role = role;
    }
    if (r.contains("contains")) rule.contains = r.at("contains").get<std::vector<std::string>>();
    if (r.contains("excludes")) rule.excludes = r.at("excludes").get<std::vector<std::string>>();
    if (!r.contains("response") || !r.at("response").is_string())
      throw ConfigError(where + ": missing string response");
    rule.response = r.at("response").get<std::string>();
    rule.consume_once = r.value("consume_once", false);
    rules.push_back(std::move(rule));
  }
  return rules;
}

json rules_to_json(const std::vector<ScriptedRule>& rules) {
  json out = json::array();
  for (const auto& r : rules) {
    json j;
    j["role"] = r.role ? json(std::string(to_string(*r.role))) : json();
    j["contains"] = r.contains;
    if (!r.excludes.empty()) j["excludes"] = r.excludes;
    j["response"] = r.response;
    if (r.consume_once) j["consume_once"] = true;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<ScriptedRule> load_rules_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scripted rules " + path.string());
  try {
    return rules_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules)
    : rules_(std::move(rules)), consumed_(rules_.size(), false) {}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  const std::string text = render_text(request);
  std::lock_guard lock(mu_);
  ++calls_;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const ScriptedRule& r = rules_[i];
    if (consumed_[i]) continue;
    if (r.role && *r.role != request.role) continue;
    bool ok = true;
    for (const auto& c : r.contains)
      if (text.find(c) == std::string::npos) ok = false;
    for (const auto& x : r.excludes)
      if (text.find(x) != std::string::npos) ok = false;
    if (!ok) continue;
    if (r.consume_once) consumed_[i] = true;
    return r.response;
  }
  throw NoScriptedMatch(request.role);
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptedRule> rules) : rules_(std::move(rules)) {}

ScriptedProvider::ScriptedProvider(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) throw ConfigError("scripted path not found: " + path_.string());
  if (!std::filesystem::is_directory(path_)) rules_ = load_rules_file(path_);
}

std::unique_ptr<Backend> ScriptedProvider::open_episode(const std::string& task_id) const {
  if (rules_) return std::make_unique<ScriptedBackend>(*rules_);
  auto file = path_ / (task_id + ".json");
  if (!std::filesystem::exists(file)) throw ConfigError("no scripted rules for task " + task_id);
  return std::make_unique<ScriptedBackend>(load_rules_file(file));
}

std::string ScriptedProvider::describe() const {
  return path_.empty() ? "scripted:<inline>" : "scripted:" + path_.string();
}

}  // namespace deskagent::llm
