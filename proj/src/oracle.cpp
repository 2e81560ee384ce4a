#include <fstream>

#include "deskagent/bench_harness.hpp"

namespace deskagent::bench {

using nlohmann::json;
using llm::RoleTag;
using llm::ScriptedRule;
namespace fs = std::filesystem;

namespace {

std::string marker(const std::string& text) { return "Current subtask: " + text + "\n"; }

ScriptedRule rule(RoleTag role, std::vector<std::string> contains, std::string response, bool once = false) {
  return {role, std::move(contains), {}, std::move(response), once};
}

// The plan the oracle planner proposes: the parent's meta plan.
agent::Plan meta_plan(const TaskSpec& task, const std::vector<TaskSpec>& all) {
  const GtPlan* gt = &task.gt_plan;
  for (const auto& t : all)
    if (!task.parent.empty() && t.id == task.parent) gt = &t.gt_plan;
  agent::Plan plan;
  for (const auto& m : gt->milestones) {
    agent::Milestone ms{m.title, {}};
    for (const auto& s : m.subtasks)
      if (!s.added) ms.subtasks.push_back({s.id, s.text, agent::SubtaskStatus::Pending});
    if (!ms.subtasks.empty()) plan.milestones.push_back(std::move(ms));
  }
  return plan;
}

// A pointer move next to the GT action's target: changes nothing on screen.
std::string miss_for(const GtSubtask& s) {
  for (const auto& a : dsl::parse_script(s.action, dsl::ScriptMode::Strict).actions)
    if (auto p = dsl::target_point(a)) return dsl::serialize_action(dsl::MoveTo{p->x, p->y});
  return "moveTo(0, 0)";
}

std::string decision_for(agent::SubtaskStatus status) {
  switch (status) {
    case agent::SubtaskStatus::Done: return "<Finished>\nThe screen shows this subtask is already complete.";
    case agent::SubtaskStatus::Skipped: return "<Pass>\nThe screen already shows the intended state.";
    default: return "<Continue>\nThe subtask applies to the current screen.";
  }
}

}  // namespace

std::vector<ScriptedRule> oracle_rules(const TaskSpec& task, const std::vector<TaskSpec>& all,
                                       const OracleFaults& faults) {
  std::vector<ScriptedRule> rules;
  const agent::Plan plan = meta_plan(task, all);
  const std::string plan_text = agent::plan_to_text(plan);
  const std::vector<GtSubtask> subtasks = task.gt_plan.flattened();

  // Planner and planner-critic.
  if (faults.redundant_plan && !task.redundant_subtask.empty()) {
    agent::Plan padded = plan;
    for (auto& m : padded.milestones)
      for (std::size_t k = 0; k < m.subtasks.size(); ++k)
        if (m.subtasks[k].id == task.redundant_subtask) {
          m.subtasks.insert(m.subtasks.begin() + static_cast<std::ptrdiff_t>(k) + 1, m.subtasks[k]);
          break;
        }
    rules.push_back(rule(RoleTag::Planner, {}, agent::plan_to_text(padded)));
    rules.push_back(rule(RoleTag::PlannerCritic, {},
                         "<Flag>False</Flag>\n<Feedback>Redundant Steps</Feedback>\n<Correction>\n" + plan_text +
                             "</Correction>\n<Reason>A repeated step would undo itself.</Reason>"));
  } else {
    rules.push_back(rule(RoleTag::Planner, {}, plan_text));
    rules.push_back(rule(RoleTag::PlannerCritic, {}, "<Flag>True</Flag>\n<Reason>The plan covers the task.</Reason>"));
  }

  // Region search: the first check cannot confirm, the cropped one decides.
  if (task.region_search) {
    for (const auto& s : subtasks) {
      if (s.id != task.region_search->subtask) continue;
      rules.push_back(rule(RoleTag::StepCheck, {marker(s.text), "Region: ["}, decision_for(s.status)));
      rules.push_back(rule(RoleTag::StepCheck, {marker(s.text)}, "#Cannot confirm\nThe dropdown state is unclear."));
      rules.push_back(rule(RoleTag::RegionChooser, {marker(s.text)}, "<Element>" + task.region_search->anchor + "</Element>"));
    }
  }

  // Step-check: pre-completed subtasks resolve; recovery steps are spliced in
  // ahead of the first original subtask that follows them.
  std::vector<std::string> pending_added;
  for (const auto& s : subtasks) {
    if (s.added) {
      pending_added.push_back(s.text);
      continue;
    }
    if (!pending_added.empty()) {
      std::string list = "<Modify>\n";
      pending_added.push_back(s.text);
      for (std::size_t k = 0; k < pending_added.size(); ++k)
        list += std::to_string(k + 1) + ". " + pending_added[k] + "\n";
      list += "</Modify>";
      rules.push_back(rule(RoleTag::StepCheck, {marker(s.text)}, list, true));
      pending_added.clear();
    }
    if (s.status != agent::SubtaskStatus::Pending)
      rules.push_back(rule(RoleTag::StepCheck, {marker(s.text)}, decision_for(s.status)));
  }
  rules.push_back(rule(RoleTag::StepCheck, {}, decision_for(agent::SubtaskStatus::Pending)));

  // Actor correction, then the actor.
  for (const auto& s : subtasks) {
    const std::vector<std::string> ctx = {"Actor Correction\n", marker(s.text)};
    if (!faults.stubborn_subtask.empty() && s.id == faults.stubborn_subtask)
      for (int k = 0; k < 2; ++k) rules.push_back(rule(RoleTag::Actor, ctx, miss_for(s), true));
    auto located = ctx;
    located.push_back("Located element: \"" + s.target + "\"");
    rules.push_back(rule(RoleTag::Actor, located, s.action));
  }
  for (const auto& s : subtasks) {
    if (faults.actor_miss) {
      ScriptedRule miss = rule(RoleTag::Actor, {marker(s.text)}, miss_for(s), true);
      miss.excludes = {"Actor Correction\n"};
      rules.push_back(std::move(miss));
    }
    ScriptedRule act = rule(RoleTag::Actor, {marker(s.text)}, s.action);
    act.excludes = {"Actor Correction\n"};
    rules.push_back(std::move(act));
  }

  // Actor-critic: an unchanged screen is a miss.
  for (const auto& s : subtasks)
    rules.push_back(rule(RoleTag::ActorCritic, {marker(s.text), "Screen changed: no"},
                         "<Success>False</Success>\n<Feedback>The screen did not change; the action missed \"" +
                             s.target + "\".</Feedback>\n<Target>" + s.target + "</Target>"));
  rules.push_back(rule(RoleTag::ActorCritic, {}, "<Success>True</Success>\n<Feedback>The screen changed as expected.</Feedback>"));
  return rules;
}

OracleProvider::OracleProvider(std::vector<TaskSpec> tasks, OracleFaults faults)
    : tasks_(std::move(tasks)), faults_(std::move(faults)) {}

std::unique_ptr<llm::Backend> OracleProvider::open_episode(const std::string& task_id) const {
  for (const auto& t : tasks_)
    if (t.id == task_id) return std::make_unique<llm::ScriptedBackend>(oracle_rules(t, tasks_, faults_));
  throw Error("UnknownTask", "oracle has no task '" + task_id + "'");
}

std::string OracleProvider::describe() const { return "oracle (" + std::to_string(tasks_.size()) + " tasks)"; }

std::vector<AblationSpec> default_ablations(const std::vector<TaskSpec>& tasks) {
  AblationSpec actor{"actor_critic", "actor_miss", "actor_critic", {}, {}};
  actor.faults.actor_miss = true;
  AblationSpec step{"step_check", "oracle", "step_check", {}, {}};
  AblationSpec planner{"planner_critic", "redundant", "planner_critic", {}, {}};
  planner.faults.redundant_plan = true;
  AblationSpec witness{"budget_witness", "stubborn", "none", {}, {}};
  witness.faults.actor_miss = true;
  witness.faults.stubborn_subtask = "s2";
  for (const auto& t : tasks) {
    if (t.kind == TaskKind::Meta) {
      actor.tasks.push_back(t.id);
      if (!t.redundant_subtask.empty()) planner.tasks.push_back(t.id);
      if (witness.tasks.empty()) witness.tasks.push_back(t.id);
    }
    if (t.kind == TaskKind::TrimStep || t.kind == TaskKind::AdjustStep) step.tasks.push_back(t.id);
  }
  return {actor, step, planner, witness};
}

json ablations_to_json(const std::vector<AblationSpec>& specs) {
  json out = json::array();
  for (const auto& s : specs)
    out.push_back({{"name", s.name},
                   {"fixture_dir", s.fixture_dir},
                   {"disable", s.disable},
                   {"tasks", s.tasks},
                   {"faults",
                    {{"actor_miss", s.faults.actor_miss},
                     {"redundant_plan", s.faults.redundant_plan},
                     {"stubborn_subtask", s.faults.stubborn_subtask}}}});
  return out;
}

std::vector<AblationSpec> ablations_from_json(const json& j) {
  std::vector<AblationSpec> out;
  try {
    for (const auto& s : j) {
      AblationSpec a;
      a.name = s.at("name").get<std::string>();
      a.fixture_dir = s.at("fixture_dir").get<std::string>();
      a.disable = s.at("disable").get<std::string>();
      a.tasks = s.at("tasks").get<std::vector<std::string>>();
      const json& f = s.at("faults");
      a.faults.actor_miss = f.value("actor_miss", false);
      a.faults.redundant_plan = f.value("redundant_plan", false);
      a.faults.stubborn_subtask = f.value("stubborn_subtask", "");
      out.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw Error("AblationFormatError", e.what());
  }
  return out;
}

void write_fixtures(const std::vector<TaskSpec>& tasks, const fs::path& out_dir) {
  auto write = [&](const fs::path& dir, const TaskSpec& t, const OracleFaults& faults) {
    fs::create_directories(dir);
    std::ofstream out(dir / (t.id + ".json"), std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + (dir / (t.id + ".json")).string());
    out << llm::rules_to_json(oracle_rules(t, tasks, faults)).dump(2) << "\n";
  };
  for (const auto& t : tasks) write(out_dir / "oracle", t, {});
  const auto ablations = default_ablations(tasks);
  for (const auto& a : ablations) {
    if (a.fixture_dir == "oracle") continue;
    for (const auto& id : a.tasks)
      for (const auto& t : tasks)
        if (t.id == id) write(out_dir / a.fixture_dir, t, a.faults);
  }
  std::ofstream out(out_dir / "ablations.json", std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + (out_dir / "ablations.json").string());
  out << ablations_to_json(ablations).dump(2) << "\n";
}

}  // namespace deskagent::bench
