#include "deskagent/bench_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "deskagent/gui_context.hpp"

namespace deskagent::bench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::Office, "Office"}, {Category::WinUsage, "WinUsage"}, {Category::Web, "Web"},
    {Category::Coding, "Coding"}, {Category::Media, "Media"}};
constexpr std::pair<TaskKind, std::string_view> kKindNames[] = {
    {TaskKind::Meta, "Meta"}, {TaskKind::AddStep, "AddStep"}, {TaskKind::TrimStep, "TrimStep"},
    {TaskKind::AdjustStep, "AdjustStep"}};
constexpr std::pair<Difficulty, std::string_view> kDifficultyNames[] = {
    {Difficulty::Simple, "simple"}, {Difficulty::Medium, "medium"}, {Difficulty::Hard, "hard"}};

template <typename E, std::size_t N>
std::string_view name_of(const std::pair<E, std::string_view> (&table)[N], E value) {
  for (const auto& [v, n] : table)
    if (v == value) return n;
  return table[0].second;
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::pair<E, std::string_view> (&table)[N], std::string_view name) {
  for (const auto& [v, n] : table)
    if (n == name) return v;
  return std::nullopt;
}

json read_json(const fs::path& path, const std::string& task_id) {
  std::ifstream in(path);
  if (!in) throw ManifestError(task_id, "", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestError(task_id, "", path.string() + ": " + e.what());
  }
}

std::string get_string(const json& j, const std::string& task_id, const char* field, bool required) {
  if (!j.contains(field)) {
    if (required) throw ManifestError(task_id, field, "missing");
    return {};
  }
  if (!j.at(field).is_string()) throw ManifestError(task_id, field, "expected string");
  return j.at(field).get<std::string>();
}

void check_script(const std::string& text, dsl::ScriptMode mode, const std::string& task_id,
                  const std::string& field) {
  try {
    dsl::parse_script(text, mode);
  } catch (const dsl::ParseError& e) {
    throw ManifestError(task_id, field, e.what());
  }
}

GtPlan parse_gt_plan(const json& j, const std::string& task_id) {
  if (!j.is_array() || j.empty()) throw ManifestError(task_id, "gt_plan", "expected non-empty array of milestones");
  GtPlan plan;
  std::size_t n = 0;
  for (const auto& m : j) {
    GtMilestone ms;
    ms.title = get_string(m, task_id, "title", true);
    if (!m.contains("subtasks") || !m.at("subtasks").is_array() || m.at("subtasks").empty())
      throw ManifestError(task_id, "gt_plan", "milestone '" + ms.title + "' has no subtasks");
    for (const auto& s : m.at("subtasks")) {
      GtSubtask st;
      st.id = "s" + std::to_string(++n);
      st.text = get_string(s, task_id, "text", true);
      st.action = get_string(s, task_id, "action", true);
      st.target = get_string(s, task_id, "target", true);
      check_script(st.action, dsl::ScriptMode::Strict, task_id, "gt_plan/" + st.id + "/action");
      ms.subtasks.push_back(std::move(st));
    }
    plan.milestones.push_back(std::move(ms));
  }
  return plan;
}

GtSubtask* find_subtask(GtPlan& plan, const std::string& id) {
  for (auto& m : plan.milestones)
    for (auto& s : m.subtasks)
      if (s.id == id) return &s;
  return nullptr;
}

// Inserts the variant's recovery steps and marks pre-completed subtasks.
void apply_variant_plan(GtPlan& plan, const json& t, const std::string& task_id) {
  if (t.contains("resolved")) {
    const json& r = t.at("resolved");
    if (!r.is_object()) throw ManifestError(task_id, "resolved", "expected object");
    for (const auto& [id, how] : r.items()) {
      GtSubtask* s = find_subtask(plan, id);
      if (!s) throw ManifestError(task_id, "resolved", "unknown subtask '" + id + "'");
      if (how == "finished") s->status = agent::SubtaskStatus::Done;
      else if (how == "pass") s->status = agent::SubtaskStatus::Skipped;
      else throw ManifestError(task_id, "resolved", "expected \"finished\" or \"pass\"");
    }
  }
  if (t.contains("added")) {
    const json& added = t.at("added");
    if (!added.is_array()) throw ManifestError(task_id, "added", "expected array");
    std::size_t k = 0;
    for (const auto& a : added) {
      GtSubtask st;
      st.id = "a" + std::to_string(++k);
      st.text = get_string(a, task_id, "text", true);
      st.action = get_string(a, task_id, "action", true);
      st.target = get_string(a, task_id, "target", true);
      st.added = true;
      check_script(st.action, dsl::ScriptMode::Strict, task_id, "added/" + st.id + "/action");
      const std::string before = get_string(a, task_id, "before", true);
      bool placed = false;
      for (auto& m : plan.milestones) {
        auto it = std::find_if(m.subtasks.begin(), m.subtasks.end(),
                               [&](const GtSubtask& s) { return s.id == before; });
        if (it != m.subtasks.end()) {
          m.subtasks.insert(it, std::move(st));
          placed = true;
          break;
        }
      }
      if (!placed) throw ManifestError(task_id, "added", "unknown subtask '" + before + "'");
    }
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

}  // namespace

std::string_view to_string(Category c) { return name_of(kCategoryNames, c); }
std::string_view to_string(TaskKind k) { return name_of(kKindNames, k); }
std::string_view to_string(Difficulty d) { return name_of(kDifficultyNames, d); }
std::optional<Category> category_from_string(std::string_view s) { return value_of(kCategoryNames, s); }
std::optional<TaskKind> kind_from_string(std::string_view s) { return value_of(kKindNames, s); }
std::optional<Difficulty> difficulty_from_string(std::string_view s) { return value_of(kDifficultyNames, s); }

std::vector<GtSubtask> GtPlan::flattened() const {
  std::vector<GtSubtask> out;
  for (const auto& m : milestones) out.insert(out.end(), m.subtasks.begin(), m.subtasks.end());
  return out;
}

agent::Plan GtPlan::to_plan() const {
  agent::Plan plan;
  for (const auto& m : milestones) {
    agent::Milestone ms{m.title, {}};
    for (const auto& s : m.subtasks) ms.subtasks.push_back({s.id, s.text, agent::SubtaskStatus::Pending});
    plan.milestones.push_back(std::move(ms));
  }
  return plan;
}

EvalSpec parse_eval(const json& j, const std::string& task_id) {
  if (!j.is_object()) throw ManifestError(task_id, "eval", "expected object");
  const std::string type = get_string(j, task_id, "type", true);
  if (type == "exact") {
    ExactStateMatch spec;
    if (j.contains("flags")) {
      if (!j.at("flags").is_array()) throw ManifestError(task_id, "eval/flags", "expected array");
      for (const auto& f : j.at("flags")) {
        if (!f.is_string()) throw ManifestError(task_id, "eval/flags", "expected strings");
        spec.flags.push_back(f.get<std::string>());
      }
    }
    if (j.contains("widgets")) {
      if (!j.at("widgets").is_array()) throw ManifestError(task_id, "eval/widgets", "expected array");
      for (const auto& w : j.at("widgets")) {
        WidgetPredicate p;
        p.widget = get_string(w, task_id, "widget", true);
        p.field = get_string(w, task_id, "field", true);
        if (!w.contains("equals")) throw ManifestError(task_id, "eval/widgets", "missing equals");
        p.equals = w.at("equals");
        spec.widgets.push_back(std::move(p));
      }
    }
    if (j.contains("digest")) {
      const std::string hex = get_string(j, task_id, "digest", true);
      try {
        std::size_t used = 0;
        spec.digest = std::stoull(hex, &used, 16);
        if (used != hex.size()) throw std::invalid_argument(hex);
      } catch (const std::exception&) {
        throw ManifestError(task_id, "eval/digest", "expected hex digest");
      }
    }
    if (spec.flags.empty() && spec.widgets.empty() && !spec.digest)
      throw ManifestError(task_id, "eval", "needs at least one check");
    return spec;
  }
  if (type == "file_status") {
    FileStatus spec;
    if (!j.contains("predicates") || !j.at("predicates").is_array())
      throw ManifestError(task_id, "eval/predicates", "expected array");
    for (const auto& p : j.at("predicates")) {
      env::FsPredicate pred;
      const std::string kind = get_string(p, task_id, "kind", true);
      pred.path = get_string(p, task_id, "path", true);
      if (kind == "exists") pred.kind = env::FsPredicate::Kind::Exists;
      else if (kind == "absent") pred.kind = env::FsPredicate::Kind::Absent;
      else if (kind == "in_dir") {
        pred.kind = env::FsPredicate::Kind::InDir;
        pred.dir = get_string(p, task_id, "dir", true);
      } else {
        throw ManifestError(task_id, "eval/predicates", "unknown kind '" + kind + "'");
      }
      spec.predicates.push_back(std::move(pred));
    }
    if (spec.predicates.empty()) throw ManifestError(task_id, "eval", "needs at least one check");
    return spec;
  }
  throw ManifestError(task_id, "eval/type", "expected \"exact\" or \"file_status\"");
}

json eval_to_json(const EvalSpec& spec) {
  if (const auto* e = std::get_if<ExactStateMatch>(&spec)) {
    json j = {{"type", "exact"}, {"flags", e->flags}};
    json widgets = json::array();
    for (const auto& w : e->widgets) widgets.push_back({{"widget", w.widget}, {"field", w.field}, {"equals", w.equals}});
    j["widgets"] = std::move(widgets);
    if (e->digest) j["digest"] = env::digest_hex(*e->digest);
    return j;
  }
  const auto& f = std::get<FileStatus>(spec);
  json preds = json::array();
  for (const auto& p : f.predicates) {
    json pj = {{"path", p.path}};
    switch (p.kind) {
      case env::FsPredicate::Kind::Exists: pj["kind"] = "exists"; break;
      case env::FsPredicate::Kind::Absent: pj["kind"] = "absent"; break;
      case env::FsPredicate::Kind::InDir:
        pj["kind"] = "in_dir";
        pj["dir"] = p.dir;
        break;
    }
    preds.push_back(std::move(pj));
  }
  return {{"type", "file_status"}, {"predicates", std::move(preds)}};
}

std::vector<TaskSpec> parse_family(const json& doc, const fs::path& base) {
  if (!doc.is_object()) throw ManifestError("", "", "family document must be an object");
  const std::string family = get_string(doc, "", "family", true);
  const auto category = category_from_string(get_string(doc, "", "category", true));
  if (!category) throw ManifestError("", "category", "unknown category in family " + family);
  const fs::path scenario = resolve(base, get_string(doc, "", "scenario", true));
  if (!doc.contains("tasks") || !doc.at("tasks").is_array())
    throw ManifestError("", "tasks", "family " + family + " needs a tasks array");

  static const std::set<std::string> known = {"id",    "kind",  "parent",     "query",    "instruction_text",
                                              "pre_actions", "gt_plan", "eval", "difficulty", "added",
                                              "resolved", "region_search", "redundant_subtask"};
  std::vector<TaskSpec> out;
  std::map<std::string, std::size_t> index;
  for (const auto& t : doc.at("tasks")) {
    TaskSpec spec;
    spec.id = get_string(t, "", "id", true);
    const std::string& id = spec.id;
    if (index.count(id)) throw ManifestError(id, "id", "duplicate task id");
    for (const auto& [key, value] : t.items())
      if (!known.count(key)) throw ManifestError(id, key, "unknown field");
    spec.family = family;
    spec.category = *category;
    spec.scenario_ref = scenario;
    if (!fs::exists(scenario)) throw ManifestError(id, "scenario_ref", "cannot find " + scenario.string());
    auto kind = kind_from_string(get_string(t, id, "kind", true));
    if (!kind) throw ManifestError(id, "kind", "expected Meta, AddStep, TrimStep or AdjustStep");
    spec.kind = *kind;
    spec.parent = get_string(t, id, "parent", false);
    spec.pre_actions = get_string(t, id, "pre_actions", false);

    const TaskSpec* parent = nullptr;
    if (spec.kind == TaskKind::Meta) {
      if (!spec.parent.empty()) throw ManifestError(id, "parent", "meta tasks have no parent");
      if (!spec.pre_actions.empty()) throw ManifestError(id, "pre_actions", "meta tasks start from the default state");
      if (t.contains("added") || t.contains("resolved"))
        throw ManifestError(id, "added", "meta tasks have no plan adjustments");
    } else {
      if (spec.parent.empty()) throw ManifestError(id, "parent", "augmented tasks need a parent meta task");
      auto it = index.find(spec.parent);
      if (it == index.end()) throw ManifestError(id, "parent", "unknown parent '" + spec.parent + "'");
      parent = &out[it->second];
      if (parent->kind != TaskKind::Meta) throw ManifestError(id, "parent", "parent must be a meta task");
      if (spec.pre_actions.empty()) throw ManifestError(id, "pre_actions", "augmented tasks need pre-actions");
    }
    check_script(spec.pre_actions, dsl::ScriptMode::Preaction, id, "pre_actions");

    auto inherit = [&](const char* field) -> std::string {
      std::string v = get_string(t, id, field, !parent);
      return v.empty() && parent ? (std::string(field) == "query" ? parent->query : parent->instruction_text) : v;
    };
    spec.query = inherit("query");
    spec.instruction_text = inherit("instruction_text");

    if (t.contains("gt_plan")) spec.gt_plan = parse_gt_plan(t.at("gt_plan"), id);
    else if (parent) {
      spec.gt_plan = parent->gt_plan;
      for (auto& m : spec.gt_plan.milestones)
        for (auto& s : m.subtasks) s.status = agent::SubtaskStatus::Pending;
      for (auto& m : spec.gt_plan.milestones)
        m.subtasks.erase(std::remove_if(m.subtasks.begin(), m.subtasks.end(), [](const GtSubtask& s) { return s.added; }),
                         m.subtasks.end());
    } else throw ManifestError(id, "gt_plan", "missing");
    apply_variant_plan(spec.gt_plan, t, id);

    if (t.contains("eval")) spec.eval = parse_eval(t.at("eval"), id);
    else if (parent) spec.eval = parent->eval;
    else throw ManifestError(id, "eval", "missing");

    if (t.contains("difficulty")) {
      auto d = difficulty_from_string(get_string(t, id, "difficulty", true));
      if (!d) throw ManifestError(id, "difficulty", "expected simple, medium or hard");
      spec.difficulty = *d;
    } else if (parent) {
      spec.difficulty = parent->difficulty;
    }

    if (t.contains("region_search")) {
      const json& r = t.at("region_search");
      RegionSearchHint hint{get_string(r, id, "subtask", true), get_string(r, id, "anchor", true)};
      if (!find_subtask(spec.gt_plan, hint.subtask))
        throw ManifestError(id, "region_search", "unknown subtask '" + hint.subtask + "'");
      spec.region_search = hint;
    }
    spec.redundant_subtask = get_string(t, id, "redundant_subtask", false);
    if (!spec.redundant_subtask.empty() && !find_subtask(spec.gt_plan, spec.redundant_subtask))
      throw ManifestError(id, "redundant_subtask", "unknown subtask '" + spec.redundant_subtask + "'");

    index[id] = out.size();
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<TaskSpec> load_tasks(const fs::path& manifest) {
  std::vector<fs::path> families;
  fs::path base;
  if (fs::is_directory(manifest)) {
    for (const auto& entry : fs::directory_iterator(manifest))
      if (entry.path().extension() == ".json") families.push_back(entry.path());
    std::sort(families.begin(), families.end());
  } else {
    json doc = read_json(manifest, "");
    base = manifest.parent_path();
    if (doc.is_null() || (doc.is_object() && doc.empty()) || (doc.is_array() && doc.empty())) return {};
    if (doc.is_object() && doc.contains("families")) {
      if (!doc.at("families").is_array()) throw ManifestError("", "families", "expected array");
      for (const auto& f : doc.at("families")) {
        if (!f.is_string()) throw ManifestError("", "families", "expected paths");
        families.push_back(resolve(base, f.get<std::string>()));
      }
    } else {
      return parse_family(doc, base);
    }
  }

  std::vector<TaskSpec> out;
  std::set<std::string> ids;
  for (const auto& path : families) {
    auto tasks = parse_family(read_json(path, ""), path.parent_path());
    for (auto& t : tasks) {
      if (!ids.insert(t.id).second) throw ManifestError(t.id, "id", "duplicate task id across families");
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::string augment_family(json& doc, const std::string& task_id, TaskKind kind, const std::string& pre_actions) {
  if (kind == TaskKind::Meta) throw ManifestError(task_id, "kind", "augmented variants cannot be Meta");
  if (!doc.contains("tasks") || !doc.at("tasks").is_array()) throw ManifestError("", "tasks", "missing tasks array");
  json& tasks = doc["tasks"];
  const json* parent = nullptr;
  for (const auto& t : tasks)
    if (t.value("id", "") == task_id) parent = &t;
  if (!parent) throw ManifestError(task_id, "id", "no such task in this family");
  if (parent->value("kind", "") != "Meta") throw ManifestError(task_id, "kind", "only meta tasks can be augmented");
  if (pre_actions.empty()) throw ManifestError(task_id, "pre_actions", "augmented tasks need pre-actions");
  check_script(pre_actions, dsl::ScriptMode::Preaction, task_id, "pre_actions");

  const std::string suffix = kind == TaskKind::AddStep ? "add" : kind == TaskKind::TrimStep ? "trim" : "adjust";
  auto taken = [&](const std::string& id) {
    return std::any_of(tasks.begin(), tasks.end(), [&](const json& t) { return t.value("id", "") == id; });
  };
  std::string id = task_id + "-" + suffix;
  for (int n = 2; taken(id); ++n) id = task_id + "-" + suffix + "-" + std::to_string(n);
  tasks.push_back({{"id", id}, {"kind", std::string(to_string(kind))}, {"parent", task_id}, {"pre_actions", pre_actions}});
  return id;
}

env::EnvState materialize(const TaskSpec& task, const env::Prefs* carried) {
  env::EnvState state = env::load_scenario_file(task.scenario_ref, carried);
  if (task.pre_actions.empty()) return state;
  return env::apply_preactions(state, dsl::parse_script(task.pre_actions, dsl::ScriptMode::Preaction));
}

int evaluate(const env::EnvState& state, const EvalSpec& spec) {
  if (const auto* e = std::get_if<ExactStateMatch>(&spec)) {
    for (const auto& f : e->flags)
      if (!state.goal_flags.count(f)) return 0;
    for (const auto& p : e->widgets) {
      const env::Widget* w = env::find_widget(state.root, p.widget);
      if (!w || env::widget_field(*w, p.field) != p.equals) return 0;
    }
    if (e->digest && env::observe(state).screenshot.digest != *e->digest) return 0;
    return 1;
  }
  for (const auto& p : std::get<FileStatus>(spec).predicates)
    if (!env::fs_status(state, p)) return 0;
  return 1;
}

std::vector<ValidationIssue> validate_task(const TaskSpec& task) {
  std::vector<ValidationIssue> issues;
  auto issue = [&](const std::string& m) { issues.push_back({task.id, m}); };
  try {
    env::EnvState state = materialize(task, nullptr);
    if (evaluate(state, task.eval) == 1) issue("initial state already passes the evaluator");
    for (const auto& s : task.gt_plan.flattened()) {
      if (s.status != agent::SubtaskStatus::Pending) continue;
      env::Observation before = env::observe(state);
      try {
        gui::locate_element(s.target, gui::parse_elements(before));
      } catch (const gui::NoMatch&) {
        issue(s.id + ": target '" + s.target + "' is not on screen");
      }
      state = env::run_script(state, dsl::parse_script(s.action, dsl::ScriptMode::Strict));
      if (env::observe(state).screenshot.digest == before.screenshot.digest)
        issue(s.id + ": action leaves the screen unchanged");
    }
    if (evaluate(state, task.eval) != 1) issue("GT replay does not satisfy the evaluator");
  } catch (const Error& e) {
    issue(e.code() + ": " + e.what());
  }
  return issues;
}

env::EnvState replay_gt(const TaskSpec& task) {
  env::EnvState state = materialize(task, nullptr);
  for (const auto& s : task.gt_plan.flattened())
    if (s.status == agent::SubtaskStatus::Pending)
      state = env::run_script(state, dsl::parse_script(s.action, dsl::ScriptMode::Strict));
  return state;
}

std::optional<double> Cell::sr() const {
  if (attempts == 0) return std::nullopt;
  return 100.0 * successes / attempts;
}

Cell RunReport::cell(std::optional<Category> category, std::optional<bool> augmented) const {
  Cell c;
  for (const auto& t : tasks) {
    if (category && t.category != *category) continue;
    if (augmented && (t.kind != TaskKind::Meta) != *augmented) continue;
    ++c.attempts;
    c.successes += t.reward;
  }
  return c;
}

bool RunReport::any_error() const {
  return std::any_of(tasks.begin(), tasks.end(),
                     [](const TaskResult& t) { return t.status == "error" || t.status == "failed"; });
}

namespace {

TaskResult run_one(const TaskSpec& task, const llm::BackendProvider& backends, const llm::PromptSet& prompts,
                   const agent::AgentConfig& config, const env::Prefs* carried_in, env::Prefs* carried_out) {
  TaskResult r;
  r.id = task.id;
  r.category = task.category;
  r.kind = task.kind;
  r.trace.task_id = task.id;
  auto start = std::chrono::steady_clock::now();
  try {
    env::EnvState initial = materialize(task, carried_in);
    agent::TaskContext ctx;
    ctx.task_id = task.id;
    ctx.query = task.query;
    ctx.instruction_text = task.instruction_text;
    ctx.scenario_ref = task.scenario_ref.string();
    ctx.pre_actions = task.pre_actions;
    ctx.evaluator = [&task](const env::EnvState& s) { return evaluate(s, task.eval); };
    auto backend = backends.open_episode(task.id);
    agent::EpisodeResult result = agent::run_episode(ctx, initial, *backend, prompts, config);
    r.reward = result.reward;
    r.steps = result.trace.budgets.loop_iterations;
    r.status = result.trace.status;
    r.reason = result.trace.failure;
    r.trace = std::move(result.trace);
    if (carried_out) *carried_out = result.final_state.prefs;
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    r.reward = 0;
    r.status = "error";
    r.reason = err ? err->code() + ": " + e.what() : std::string(e.what());
    r.trace.status = "error";
    r.trace.failure = r.reason;
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

RunReport run_suite(const std::vector<TaskSpec>& tasks, const llm::BackendProvider& backends,
                    const SuiteOptions& options) {
  const llm::PromptSet prompts =
      options.prompts_dir ? llm::PromptSet::from_directory(*options.prompts_dir) : llm::PromptSet::defaults();

  // Work units: single tasks, or whole families when preferences carry over.
  std::vector<std::vector<std::size_t>> units;
  if (options.persist_prefs) {
    std::map<std::string, std::size_t> by_family;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      auto [it, fresh] = by_family.try_emplace(tasks[i].family, units.size());
      if (fresh) units.emplace_back();
      units[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < tasks.size(); ++i) units.push_back({i});
  }

  RunReport report;
  report.tasks.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      std::optional<env::Prefs> carried;
      for (std::size_t i : units[u]) {
        env::Prefs out;
        report.tasks[i] = run_one(tasks[i], backends, prompts, options.agent, carried ? &*carried : nullptr,
                                  options.persist_prefs ? &out : nullptr);
        if (options.persist_prefs && report.tasks[i].status != "error") carried = std::move(out);
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(options.parallelism, units.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return report;
}

bool disable_module(agent::AgentConfig& config, std::string_view name) {
  if (name == "planner_critic") config.planner_critic = false;
  else if (name == "step_check") config.step_check = false;
  else if (name == "actor_critic") config.actor_critic = false;
  else if (name != "none") return false;
  return true;
}

}  // namespace deskagent::bench
