#pragma once

// Task manifests, initial-state materialization, execution-oriented
// evaluation, suite running and reporting.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "deskagent/agent_core.hpp"
#include "deskagent/llm_gateway.hpp"
#include "deskagent/plan.hpp"
#include "deskagent/sim_env.hpp"

namespace deskagent::bench {

enum class Category { Office, WinUsage, Web, Coding, Media };
enum class TaskKind { Meta, AddStep, TrimStep, AdjustStep };
enum class Difficulty { Simple, Medium, Hard };

inline constexpr Category kCategories[] = {Category::Office, Category::WinUsage, Category::Web,
                                           Category::Coding, Category::Media};

std::string_view to_string(Category c);
std::string_view to_string(TaskKind k);
std::string_view to_string(Difficulty d);
std::optional<Category> category_from_string(std::string_view s);
std::optional<TaskKind> kind_from_string(std::string_view s);
std::optional<Difficulty> difficulty_from_string(std::string_view s);

/// Ground-truth subtask: the text, the literal script that performs it from
/// the task's initial state, and the label of the element it acts on.
struct GtSubtask {
  std::string id;
  std::string text;
  std::string action;
  std::string target;
  agent::SubtaskStatus status = agent::SubtaskStatus::Pending;
  bool added = false;  // recovery step not in the parent meta plan
};

struct GtMilestone {
  std::string title;
  std::vector<GtSubtask> subtasks;
};

struct GtPlan {
  std::vector<GtMilestone> milestones;
  std::vector<GtSubtask> flattened() const;
  /// Plan with the same milestones and texts (statuses reset to pending).
  agent::Plan to_plan() const;
};

struct WidgetPredicate {
  std::string widget;
  std::string field;  // visible | enabled | selected | value | attr:<name>
  nlohmann::json equals;
};

struct ExactStateMatch {
  std::vector<std::string> flags;
  std::vector<WidgetPredicate> widgets;
  std::optional<std::uint64_t> digest;  // screenshot digest of the final state
};

struct FileStatus {
  std::vector<env::FsPredicate> predicates;
};

using EvalSpec = std::variant<ExactStateMatch, FileStatus>;

/// Scripted region-search hint used by the oracle generator.
struct RegionSearchHint {
  std::string subtask;
  std::string anchor;
};

struct TaskSpec {
  std::string id;
  std::string family;
  Category category = Category::Office;
  TaskKind kind = TaskKind::Meta;
  std::string query;
  std::string instruction_text;
  std::filesystem::path scenario_ref;
  std::string pre_actions;
  GtPlan gt_plan;
  EvalSpec eval;
  Difficulty difficulty = Difficulty::Medium;
  std::string parent;
  std::optional<RegionSearchHint> region_search;
  std::string redundant_subtask;  // a subtask whose repetition undoes it
};

class ManifestError : public Error {
 public:
  ManifestError(std::string task_id, std::string field, const std::string& message)
      : Error("ManifestError", (task_id.empty() ? std::string("manifest") : "task " + task_id) +
                                   (field.empty() ? "" : " field '" + field + "'") + ": " + message),
        task_id_(std::move(task_id)),
        field_(std::move(field)) {}
  const std::string& task_id() const noexcept { return task_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string task_id_;
  std::string field_;
};

/// Accepts a manifest file listing family files ({"families": [...]}), a
/// single family file, or a directory of family files.
std::vector<TaskSpec> load_tasks(const std::filesystem::path& manifest);

/// Parses one family document; relative scenario paths resolve against `base`.
std::vector<TaskSpec> parse_family(const nlohmann::json& doc, const std::filesystem::path& base);

/// Adds a variant of `task_id` to a family document: the parent's plan and
/// evaluator with `pre_actions` as the new initial-state script. Returns the new id.
std::string augment_family(nlohmann::json& doc, const std::string& task_id, TaskKind kind,
                           const std::string& pre_actions);

EvalSpec parse_eval(const nlohmann::json& j, const std::string& task_id);
nlohmann::json eval_to_json(const EvalSpec& spec);

/// Default scenario state with the pre-actions applied.
env::EnvState materialize(const TaskSpec& task, const env::Prefs* carried = nullptr);

int evaluate(const env::EnvState& final_state, const EvalSpec& spec);

struct ValidationIssue {
  std::string task_id;
  std::string message;
};

/// Ground-truth checks: the literal replay of pending GT actions reaches
/// reward 1, every GT action changes the screenshot, and the initial state
/// does not already pass.
std::vector<ValidationIssue> validate_task(const TaskSpec& task);

/// Replays the pending GT actions from the materialized state.
env::EnvState replay_gt(const TaskSpec& task);

struct TaskResult {
  std::string id;
  Category category = Category::Office;
  TaskKind kind = TaskKind::Meta;
  int reward = 0;
  std::size_t steps = 0;  // loop iterations
  double wall_ms = 0.0;
  std::string status;
  std::string reason;
  agent::EpisodeTrace trace;
};

struct Cell {
  int successes = 0;
  int attempts = 0;
  std::optional<double> sr() const;
};

struct RunReport {
  std::vector<TaskResult> tasks;  // manifest order
  Cell cell(std::optional<Category> category, std::optional<bool> augmented) const;
  bool any_error() const;
};

struct SuiteOptions {
  std::size_t parallelism = 1;
  agent::AgentConfig agent;
  bool persist_prefs = false;
  std::optional<std::filesystem::path> prompts_dir;
};

RunReport run_suite(const std::vector<TaskSpec>& tasks, const llm::BackendProvider& backends,
                    const SuiteOptions& options = {});

/// SR with one decimal, or "--" when there were no attempts.
std::string format_sr(const Cell& cell);

/// Categories as rows; Meta, Aug. and Overall as columns; an Overall row last.
std::string report_table(const RunReport& report);

/// Deterministic report (no wall time) and the separate timing record.
nlohmann::json report_to_json(const RunReport& report);
nlohmann::json timings_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

/// Writes report.json, timings.json, report.txt and traces/<id>.jsonl.
void write_run(const RunReport& report, const std::filesystem::path& out_dir);

struct OracleFaults {
  bool actor_miss = false;        // first actor attempt per subtask is a no-op move
  bool redundant_plan = false;    // planner repeats the task's redundant_subtask; critic removes it
  std::string stubborn_subtask;   // this subtask's first two corrections are no-ops too
};

/// Scripted rules that solve `task` through the full agent loop.
std::vector<llm::ScriptedRule> oracle_rules(const TaskSpec& task, const std::vector<TaskSpec>& all,
                                            const OracleFaults& faults = {});

/// Oracle rules generated in memory for every task.
class OracleProvider final : public llm::BackendProvider {
 public:
  OracleProvider(std::vector<TaskSpec> tasks, OracleFaults faults = {});
  std::unique_ptr<llm::Backend> open_episode(const std::string& task_id) const override;
  std::string describe() const override;

 private:
  std::vector<TaskSpec> tasks_;
  OracleFaults faults_;
};

/// One ablation: a fixture directory, the task subset it covers and the
/// module to disable.
struct AblationSpec {
  std::string name;
  std::string fixture_dir;
  std::string disable;  // planner_critic | step_check | actor_critic | none
  std::vector<std::string> tasks;
  OracleFaults faults;
};

std::vector<AblationSpec> default_ablations(const std::vector<TaskSpec>& tasks);
nlohmann::json ablations_to_json(const std::vector<AblationSpec>& specs);
std::vector<AblationSpec> ablations_from_json(const nlohmann::json& j);

/// Writes oracle/<id>.json plus one directory per ablation and ablations.json.
void write_fixtures(const std::vector<TaskSpec>& tasks, const std::filesystem::path& out_dir);

/// Applies a module-disable switch by name; false for unknown names.
bool disable_module(agent::AgentConfig& config, std::string_view name);

}  // namespace deskagent::bench
