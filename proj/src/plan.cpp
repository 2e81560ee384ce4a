#include "deskagent/plan.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace deskagent::agent {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

const std::regex& milestone_re() {
  static const std::regex re(R"(^[#*\s]*milestone\s*(?:\d+\s*[:.\-]?|[:.\-])\s*(.*?)[*\s]*$)", std::regex::icase);
  return re;
}

const std::regex& numbered_re() {
  static const std::regex re(R"(^\s*\d+\s*[.)]\s+(.*\S)\s*$)");
  return re;
}

std::vector<std::string> numbered_items(std::string_view text) {
  std::vector<std::string> out;
  std::smatch m;
  for (const auto& line : lines_of(text))
    if (std::regex_match(line, m, numbered_re())) out.push_back(trim(m[1].str()));
  return out;
}

std::optional<bool> parse_bool(const std::string& s) {
  std::string v = lower(trim(s));
  if (v == "true" || v == "yes") return true;
  if (v == "false" || v == "no") return false;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(SubtaskStatus s) {
  switch (s) {
    case SubtaskStatus::Pending: return "pending";
    case SubtaskStatus::Done: return "done";
    case SubtaskStatus::Skipped: return "skipped";
    case SubtaskStatus::Failed: return "failed";
  }
  return "pending";
}

std::optional<SubtaskStatus> status_from_string(std::string_view s) {
  for (auto st : {SubtaskStatus::Pending, SubtaskStatus::Done, SubtaskStatus::Skipped, SubtaskStatus::Failed})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::size_t Plan::size() const {
  std::size_t n = 0;
  for (const auto& m : milestones) n += m.subtasks.size();
  return n;
}

Subtask& Plan::at(std::size_t i) { return const_cast<Subtask&>(static_cast<const Plan&>(*this).at(i)); }

const Subtask& Plan::at(std::size_t i) const {
  for (const auto& m : milestones) {
    if (i < m.subtasks.size()) return m.subtasks[i];
    i -= m.subtasks.size();
  }
  throw std::out_of_range("subtask index out of range");
}

std::vector<Subtask> Plan::flattened() const {
  std::vector<Subtask> out;
  for (const auto& m : milestones) out.insert(out.end(), m.subtasks.begin(), m.subtasks.end());
  return out;
}

void Plan::splice(std::size_t i, std::vector<Subtask> replacement) {
  for (auto& m : milestones) {
    if (i < m.subtasks.size()) {
      auto pos = m.subtasks.erase(m.subtasks.begin() + static_cast<std::ptrdiff_t>(i));
      m.subtasks.insert(pos, replacement.begin(), replacement.end());
      return;
    }
    i -= m.subtasks.size();
  }
  throw std::out_of_range("subtask index out of range");
}

std::string plan_to_text(const Plan& plan) {
  std::string out;
  for (std::size_t mi = 0; mi < plan.milestones.size(); ++mi) {
    const auto& m = plan.milestones[mi];
    out += "Milestone " + std::to_string(mi + 1) + ": " + m.title + "\n";
    for (std::size_t k = 0; k < m.subtasks.size(); ++k)
      out += std::to_string(k + 1) + ". " + m.subtasks[k].text + "\n";
  }
  return out;
}

nlohmann::json plan_to_json(const Plan& plan) {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : plan.milestones) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : m.subtasks)
      subs.push_back({{"id", s.id}, {"text", s.text}, {"status", std::string(to_string(s.status))}});
    ms.push_back({{"title", m.title}, {"subtasks", std::move(subs)}});
  }
  return {{"milestones", std::move(ms)}};
}

Plan parse_plan_text(std::string_view text) {
  Plan plan;
  std::smatch m;
  for (const auto& line : lines_of(text)) {
    if (std::regex_match(line, m, numbered_re())) {
      if (plan.milestones.empty()) plan.milestones.push_back({"", {}});
      plan.milestones.back().subtasks.push_back({"", trim(m[1].str()), SubtaskStatus::Pending});
    } else if (std::regex_match(line, m, milestone_re())) {
      plan.milestones.push_back({trim(m[1].str()), {}});
    }
  }
  plan.milestones.erase(std::remove_if(plan.milestones.begin(), plan.milestones.end(),
                                       [](const Milestone& ms) { return ms.subtasks.empty(); }),
                        plan.milestones.end());
  if (plan.milestones.empty()) throw PlanParseError("no numbered subtasks found");
  for (std::size_t i = 0; i < plan.size(); ++i) plan.at(i).id = "s" + std::to_string(i + 1);
  return plan;
}

std::optional<std::string> extract_tag(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  auto b = text.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  b += open.size();
  auto e = text.find(close, b);
  if (e == std::string_view::npos) {
    e = text.find("\n<", b);
    if (e == std::string_view::npos) e = text.size();
  }
  return trim(text.substr(b, e - b));
}

std::string_view to_string(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::WrongSteps: return "Wrong Steps";
    case FeedbackKind::MissingSteps: return "Missing Steps";
    case FeedbackKind::RedundantSteps: return "Redundant Steps";
  }
  return "Wrong Steps";
}

PlannerCriticOutput parse_critique(std::string_view text) {
  PlannerCriticOutput out;
  auto flag = extract_tag(text, "Flag");
  if (!flag) throw CritiqueParseError("missing <Flag>");
  auto value = parse_bool(*flag);
  if (!value) throw CritiqueParseError("<Flag> must be True or False");
  out.flag = *value;
  out.reason = extract_tag(text, "Reason").value_or("");
  if (out.flag) return out;

  auto feedback = extract_tag(text, "Feedback");
  if (!feedback) throw CritiqueParseError("<Flag>False requires <Feedback>");
  std::string f = lower(*feedback);
  if (f.find("redundant") != std::string::npos) out.feedback = FeedbackKind::RedundantSteps;
  else if (f.find("missing") != std::string::npos) out.feedback = FeedbackKind::MissingSteps;
  else if (f.find("wrong") != std::string::npos) out.feedback = FeedbackKind::WrongSteps;
  else throw CritiqueParseError("unknown <Feedback> category");

  auto correction = extract_tag(text, "Correction");
  if (!correction) throw CritiqueParseError("<Flag>False requires <Correction>");
  try {
    out.correction = parse_plan_text(*correction);
  } catch (const PlanParseError& e) {
    throw CritiqueParseError(std::string("bad <Correction>: ") + e.what());
  }
  return out;
}

std::string_view to_string(StepCheckDecision::Kind k) {
  switch (k) {
    case StepCheckDecision::Kind::Modify: return "Modify";
    case StepCheckDecision::Kind::Pass: return "Pass";
    case StepCheckDecision::Kind::Continue: return "Continue";
    case StepCheckDecision::Kind::Finished: return "Finished";
    case StepCheckDecision::Kind::CannotConfirm: return "CannotConfirm";
  }
  return "Continue";
}

StepCheckDecision parse_decision(std::string_view text) {
  StepCheckDecision d;
  if (lower(text).find("#cannot confirm") != std::string::npos) {
    d.kind = StepCheckDecision::Kind::CannotConfirm;
    return d;
  }
  using K = StepCheckDecision::Kind;
  const std::pair<std::string_view, K> tokens[] = {
      {"<Modify>", K::Modify}, {"<Pass>", K::Pass}, {"<Continue>", K::Continue}, {"<Finished>", K::Finished}};
  std::size_t best = std::string_view::npos;
  for (const auto& [tok, kind] : tokens) {
    auto pos = text.find(tok);
    if (pos < best) {
      best = pos;
      d.kind = kind;
    }
  }
  if (best == std::string_view::npos) throw DecisionParseError("no decision token");
  if (d.kind == K::Modify) {
    auto body = text.substr(best + 8);
    auto end = body.find("</Modify>");
    if (end != std::string_view::npos) body = body.substr(0, end);
    d.replacement = numbered_items(body);
    if (d.replacement.empty()) throw DecisionParseError("<Modify> needs a numbered replacement list");
  }
  return d;
}

ActorCriticVerdict parse_verdict(std::string_view text) {
  ActorCriticVerdict v;
  auto success = extract_tag(text, "Success");
  if (!success) throw VerdictParseError("missing <Success>");
  auto value = parse_bool(*success);
  if (!value) throw VerdictParseError("<Success> must be True or False");
  v.success = *value;
  v.feedback = extract_tag(text, "Feedback").value_or("");
  if (!v.success && v.feedback.empty()) throw VerdictParseError("a failed verdict needs <Feedback>");
  if (auto target = extract_tag(text, "Target")) {
    std::string t = *target;
    if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front())
      t = t.substr(1, t.size() - 2);
    if (!t.empty()) v.target = t;
  }
  return v;
}

dsl::ActionScript parse_actor_output(std::string_view text) {
  std::string body(text);
  auto fence = body.find("```");
  if (fence != std::string::npos) {
    auto start = body.find('\n', fence);
    start = start == std::string::npos ? body.size() : start + 1;
    auto end = body.find("```", start);
    body = body.substr(start, end == std::string::npos ? std::string::npos : end - start);
  }
  dsl::ActionScript script;
  try {
    script = dsl::parse_script(trim(body), dsl::ScriptMode::Strict);
  } catch (const dsl::ParseError& e) {
    throw ActionParseError(e.code() + ": " + e.what());
  }
  if (script.actions.empty()) throw ActionParseError("no actions");
  return script;
}

std::string parse_chooser(std::string_view text) {
  auto label = extract_tag(text, "Element");
  if (!label || label->empty()) throw ChooserParseError("missing <Element>");
  return *label;
}

}  // namespace deskagent::agent
