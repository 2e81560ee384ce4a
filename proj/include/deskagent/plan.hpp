#pragma once

// Hierarchical plans and the parsers for every structured model reply.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deskagent/action_dsl.hpp"
#include "deskagent/error.hpp"

namespace deskagent::agent {

enum class SubtaskStatus { Pending, Done, Skipped, Failed };

std::string_view to_string(SubtaskStatus s);
std::optional<SubtaskStatus> status_from_string(std::string_view s);

struct Subtask {
  std::string id;
  std::string text;
  SubtaskStatus status = SubtaskStatus::Pending;
  bool operator==(const Subtask&) const = default;
};

struct Milestone {
  std::string title;
  std::vector<Subtask> subtasks;
  bool operator==(const Milestone&) const = default;
};

struct Plan {
  std::vector<Milestone> milestones;

  /// Flattened subtask count.
  std::size_t size() const;
  Subtask& at(std::size_t flat_index);
  const Subtask& at(std::size_t flat_index) const;
  std::vector<Subtask> flattened() const;
  /// Replaces the subtask at `flat_index` with `replacement`, in place.
  void splice(std::size_t flat_index, std::vector<Subtask> replacement);
  bool operator==(const Plan&) const = default;
};

/// "Milestone N: title" headers, each followed by "k. subtask" lines.
std::string plan_to_text(const Plan& plan);
nlohmann::json plan_to_json(const Plan& plan);

class PlanParseError : public Error {
 public:
  explicit PlanParseError(const std::string& message) : Error("PlanParseError", message) {}
};

/// Parses plan text; subtasks get ids s1..sN in execution order. Numbered
/// lines before any header go to an untitled first milestone.
Plan parse_plan_text(std::string_view text);

/// Contents of the first <Tag>...</Tag>, or up to the next tag / end of text
/// when the closing tag is missing.
std::optional<std::string> extract_tag(std::string_view text, std::string_view tag);

enum class FeedbackKind { WrongSteps, MissingSteps, RedundantSteps };
std::string_view to_string(FeedbackKind k);

struct PlannerCriticOutput {
  bool flag = true;
  std::optional<FeedbackKind> feedback;
  std::optional<Plan> correction;
  std::string reason;
};

class CritiqueParseError : public Error {
 public:
  explicit CritiqueParseError(const std::string& message) : Error("CritiqueParseError", message) {}
};

PlannerCriticOutput parse_critique(std::string_view text);

struct StepCheckDecision {
  enum class Kind { Modify, Pass, Continue, Finished, CannotConfirm };
  Kind kind = Kind::Continue;
  std::vector<std::string> replacement;  // Modify only, non-empty
};

std::string_view to_string(StepCheckDecision::Kind k);

class DecisionParseError : public Error {
 public:
  explicit DecisionParseError(const std::string& message) : Error("DecisionParseError", message) {}
};

StepCheckDecision parse_decision(std::string_view text);

struct ActorCriticVerdict {
  bool success = false;
  std::string feedback;
  std::optional<std::string> target;
};

class VerdictParseError : public Error {
 public:
  explicit VerdictParseError(const std::string& message) : Error("VerdictParseError", message) {}
};

ActorCriticVerdict parse_verdict(std::string_view text);

class ActionParseError : public Error {
 public:
  explicit ActionParseError(const std::string& message) : Error("ActionParseError", message) {}
};

/// Strips Markdown code fences and parses the rest in strict mode.
dsl::ActionScript parse_actor_output(std::string_view text);

class ChooserParseError : public Error {
 public:
  explicit ChooserParseError(const std::string& message) : Error("ChooserParseError", message) {}
};

/// The label inside <Element>...</Element>.
std::string parse_chooser(std::string_view text);

}  // namespace deskagent::agent
