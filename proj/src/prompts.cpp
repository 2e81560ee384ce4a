// Prompt templates and request rendering.

#include <fstream>
#include <sstream>

#include "deskagent/llm_gateway.hpp"

namespace deskagent::llm {

namespace {

constexpr std::pair<RoleTag, std::string_view> kRoles[] = {
    {RoleTag::Planner, "planner"},         {RoleTag::PlannerCritic, "planner_critic"},
    {RoleTag::StepCheck, "step_check"},    {RoleTag::Actor, "actor"},
    {RoleTag::ActorCritic, "actor_critic"}, {RoleTag::RegionChooser, "region_chooser"},
};

PromptTemplate make(RoleTag role, std::string_view purpose, std::string user, int images) {
  PromptTemplate t;
  t.role = role;
  t.system = "Role: " + std::string(to_string(role)) + "\n" + std::string(purpose);
  t.user = std::move(user);
  t.images = images;
  return t;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(RoleTag role) {
  for (const auto& [r, n] : kRoles)
    if (r == role) return n;
  return "planner";
}

std::optional<RoleTag> role_from_string(std::string_view name) {
  for (const auto& [r, n] : kRoles)
    if (n == name) return r;
  return std::nullopt;
}

bool consumes_screenshots(RoleTag role) { return role != RoleTag::RegionChooser; }

std::string artifact_to_text(const env::RenderArtifact& a) {
  std::ostringstream out;
  out << "[screenshot " << a.w << "x" << a.h << " digest=" << env::digest_hex(a.digest) << "]\n";
  for (const auto& e : a.elements) {
    out << to_string(e.role) << " \"" << e.label << "\" [" << e.bbox.x << "," << e.bbox.y << ","
        << e.bbox.w << "," << e.bbox.h << "]";
    if (e.selected) out << " selected";
    if (!e.enabled) out << " disabled";
    if (e.focused) out << " focused";
    if (!std::holds_alternative<std::monostate>(e.value))
      out << " value=\"" << env::value_to_text(e.value) << "\"";
    for (const auto& [k, v] : e.attrs) out << " " << k << "=" << v;
    out << "\n";
  }
  out << "[end screenshot]";
  return out.str();
}

std::string render_text(const ChatRequest& request) {
  std::string out;
  for (const auto& m : request.messages) {
    for (const auto& p : m.parts) {
      if (auto* t = std::get_if<TextPart>(&p)) out += t->text;
      else out += artifact_to_text(std::get<ImagePart>(p).artifact);
      out += "\n";
    }
  }
  return out;
}

PromptSet PromptSet::defaults() {
  PromptSet s;
  s.templates_["planner"] = make(
      RoleTag::Planner,
      "You plan desktop tasks. Use the screenshot to account for the current state of the "
      "application.",
      "Task: {{query}}\n"
      "Instruction transcript:\n{{instruction_text}}\n"
      "Screen elements:\n{{elements}}\n"
      "Write the plan as lines \"Milestone N: <title>\", each followed by numbered subtasks "
      "\"1. <subtask>\".",
      1);
  s.templates_["planner_critic"] = make(
      RoleTag::PlannerCritic,
      "You review plans for desktop tasks against the current screen.",
      "Task: {{query}}\n"
      "Instruction transcript:\n{{instruction_text}}\n"
      "Plan:\n{{plan}}\n"
      "Screen elements:\n{{elements}}\n"
      "Reply with <Flag>True</Flag> if the plan is correct. Otherwise reply <Flag>False</Flag>, "
      "<Feedback>Wrong Steps|Missing Steps|Redundant Steps</Feedback> and "
      "<Correction>the complete corrected plan</Correction>. Always add <Reason>...</Reason>.",
      1);
  s.templates_["step_check"] = make(
      RoleTag::StepCheck,
      "You decide whether the next subtask should run on the current screen.",
      "Task: {{query}}\n"
      "Plan:\n{{plan}}\n"
      "Current subtask: {{subtask}}\n"
      "{{region}}"
      "Screen elements:\n{{elements}}\n"
      "Reply with one of <Continue>, <Pass>, <Finished>, or <Modify> followed by a numbered list "
      "of replacement subtasks. Reply #Cannot confirm if the screen is not enough to decide.",
      1);
  s.templates_["actor"] = make(
      RoleTag::Actor,
      "You translate one subtask into pyautogui-style code.",
      "Current subtask: {{subtask}}\n"
      "Previous actions:\n{{history}}\n"
      "Screen elements:\n{{elements}}\n"
      "Reply with code only, one call per line.",
      1);
  s.templates_["actor_correction"] = make(
      RoleTag::Actor,
      "You repair code for a subtask whose last attempt failed.",
      "Actor Correction\n"
      "Current subtask: {{subtask}}\n"
      "Failed code:\n{{action}}\n"
      "Critic feedback: {{feedback}}\n"
      "Located element: \"{{target_label}}\" at ({{target_x}}, {{target_y}})\n"
      "Screen elements:\n{{elements}}\n"
      "Reply with corrected code only.",
      1);
  s.templates_["actor_critic"] = make(
      RoleTag::ActorCritic,
      "You judge whether executed code completed a subtask by comparing the screen before and "
      "after.",
      "Current subtask: {{subtask}}\n"
      "Executed code:\n{{action}}\n"
      "Screen changed: {{changed}}\n"
      "The screenshots before and after execution follow in that order.\n"
      "Reply <Success>True</Success> or <Success>False</Success>, then <Feedback>...</Feedback>, "
      "and on failure <Target>label of the element to use</Target>.",
      2);
  s.templates_["region_chooser"] = make(
      RoleTag::RegionChooser,
      "You pick the screen element most relevant to a subtask.",
      "Current subtask: {{subtask}}\n"
      "Screen elements:\n{{elements}}\n"
      "Reply <Element>label</Element>.",
      0);
  return s;
}

PromptSet PromptSet::from_directory(const std::filesystem::path& dir) {
  PromptSet s = defaults();
  for (auto& [name, t] : s.templates_) {
    auto sys = dir / (name + ".system.txt");
    auto user = dir / (name + ".user.txt");
    if (std::filesystem::exists(sys)) t.system = read_file(sys);
    if (std::filesystem::exists(user)) t.user = read_file(user);
  }
  return s;
}

const PromptTemplate& PromptSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("UnknownTemplate", "no prompt template '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> PromptSet::names() const {
  std::vector<std::string> out;
  for (const auto& [n, t] : templates_) out.push_back(n);
  return out;
}

namespace {

std::string expand(std::string_view text, std::string_view name, const PromptContext& ctx) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    std::string field(text.substr(open + 2, close - open - 2));
    auto it = ctx.fields.find(field);
    if (it == ctx.fields.end()) throw MissingContextField(name, field);
    out += it->second;
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace

ChatRequest render_prompt(const PromptSet& prompts, std::string_view name, const PromptContext& ctx) {
  const PromptTemplate& t = prompts.get(name);
  if (static_cast<int>(ctx.images.size()) < t.images) throw MissingContextField(name, "screenshot");
  ChatRequest req;
  req.role = t.role;
  req.messages.push_back({Speaker::System, {TextPart{expand(t.system, name, ctx)}}});
  Message user{Speaker::User, {TextPart{expand(t.user, name, ctx)}}};
  if (consumes_screenshots(t.role))
    for (int i = 0; i < t.images; ++i) user.parts.push_back(ImagePart{ctx.images[i]});
  req.messages.push_back(std::move(user));
  return req;
}

void append_reask(ChatRequest& request, std::string_view previous_output, std::string_view problem) {
  std::string text = "Your previous reply could not be parsed (" + std::string(problem) +
                     "). Previous reply:\n" + std::string(previous_output) +
                     "\nAnswer again using exactly the requested format.";
  request.messages.push_back({Speaker::User, {TextPart{std::move(text)}}});
}

std::string complete(Backend& backend, const ChatRequest& request) { return backend.complete(request); }

}  // namespace deskagent::llm
