#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "deskagent/bench_harness.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return DESKAGENT_DATA_DIR; }
inline std::filesystem::path scenario_path(const std::string& name) {
  return data_dir() / "scenarios" / (name + ".json");
}

inline deskagent::env::EnvState load(const std::string& name) {
  return deskagent::env::load_scenario_file(scenario_path(name));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline const std::vector<deskagent::bench::TaskSpec>& suite() {
  static const auto tasks = deskagent::bench::load_tasks(data_dir() / "manifest.json");
  return tasks;
}

inline const deskagent::bench::TaskSpec& task(const std::string& id) {
  for (const auto& t : suite())
    if (t.id == id) return t;
  throw std::runtime_error("no task " + id);
}

inline deskagent::env::Point center_of(const deskagent::env::EnvState& s, const std::string& id) {
  return deskagent::env::find_widget(s.root, id)->bbox.center();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("deskagent_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing

#include <random>

namespace testing {

/// Uniformly picks a variant alternative and fills it with valid random fields.
inline deskagent::dsl::Action random_action(std::mt19937_64& rng) {
  using namespace deskagent::dsl;
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const auto keys = key_table();
  auto key = [&] { return std::string(keys[static_cast<std::size_t>(uni(0, static_cast<int>(keys.size()) - 1))]); };
  auto button = [&] { return static_cast<MouseButton>(uni(0, 2)); };
  auto text = [&] {
    static const std::string alphabet = "abcXYZ019 _-'\"\\\n\t,;()=&";
    std::string s;
    for (int i = uni(0, 12); i > 0; --i) s += alphabet[static_cast<std::size_t>(uni(0, static_cast<int>(alphabet.size()) - 1))];
    return s;
  };
  switch (uni(0, 10)) {
    case 0: return MoveTo{uni(0, 5000), uni(0, 5000)};
    case 1: return Click{uni(0, 5000), uni(0, 5000), button(), uni(1, 3)};
    case 2: return Write{text()};
    case 3: {
      Hotkey h;
      for (int n = uni(2, 4); static_cast<int>(h.keys.size()) < n;) {
        std::string k = key();
        if (std::find(h.keys.begin(), h.keys.end(), k) == h.keys.end()) h.keys.push_back(k);
      }
      return h;
    }
    case 4: return Scroll{uni(-1000, 1000)};
    case 5: return DragTo{uni(0, 5000), uni(0, 5000), std::uniform_real_distribution<double>(0.0, 10.0)(rng)};
    case 6: return MouseDown{button()};
    case 7: return MouseUp{button()};
    case 8: return Press{key()};
    case 9: return KeyDown{key()};
    default: return KeyUp{key()};
  }
}

}  // namespace testing

namespace testing {

inline deskagent::agent::TaskContext context_for(const deskagent::bench::TaskSpec& t) {
  deskagent::agent::TaskContext ctx;
  ctx.task_id = t.id;
  ctx.query = t.query;
  ctx.instruction_text = t.instruction_text;
  ctx.scenario_ref = t.scenario_ref.string();
  ctx.pre_actions = t.pre_actions;
  const auto eval = t.eval;
  ctx.evaluator = [eval](const deskagent::env::EnvState& s) { return deskagent::bench::evaluate(s, eval); };
  return ctx;
}

inline deskagent::agent::EpisodeResult run_with_rules(const deskagent::bench::TaskSpec& t,
                                                      std::vector<deskagent::llm::ScriptedRule> rules,
                                                      const deskagent::agent::AgentConfig& config = {}) {
  deskagent::llm::ScriptedBackend backend(std::move(rules));
  static const auto prompts = deskagent::llm::PromptSet::defaults();
  return deskagent::agent::run_episode(context_for(t), deskagent::bench::materialize(t), backend, prompts, config);
}

inline deskagent::agent::EpisodeResult run_oracle(const std::string& id, const deskagent::bench::OracleFaults& faults = {},
                                                  const deskagent::agent::AgentConfig& config = {}) {
  const auto& t = task(id);
  return run_with_rules(t, deskagent::bench::oracle_rules(t, suite(), faults), config);
}

/// Structural checks every trace must satisfy. Returns the first violation.
inline std::optional<std::string> trace_violation(const deskagent::agent::EpisodeTrace& trace,
                                                  const deskagent::agent::AgentConfig& config) {
  using deskagent::agent::EntryKind;
  const auto& e = trace.entries;
  if (e.empty() || e.front().kind != EntryKind::Plan) return "trace does not start with a plan";
  if (e.back().kind != EntryKind::EpisodeEnd) return "trace does not end with episode_end";
  const auto& b = trace.budgets;
  if (b.iteration_limit != config.budget_multiplier * b.n + 1) return "iteration limit is not multiplier*N+1";
  if (b.loop_iterations > b.iteration_limit) return "loop iterations exceed the limit";
  for (const auto& [id, z] : b.critic_trials)
    if (z > config.max_critic_trials) return "critic trials exceed the cap for " + id;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i].t != static_cast<int>(i)) return "entry times are not consecutive";
    const bool has_action = e[i].action.has_value();
    const bool acting = e[i].kind == EntryKind::Act || e[i].kind == EntryKind::Correct;
    if (has_action != acting) return "action recorded on a non-acting entry";
    if (e[i].kind == EntryKind::Verify && (i == 0 || (e[i - 1].kind != EntryKind::Act && e[i - 1].kind != EntryKind::Correct)))
      return "verify without a preceding action";
    if (e[i].kind == EntryKind::Correct &&
        (i == 0 || e[i - 1].kind != EntryKind::Verify || e[i - 1].detail.value("success", true)))
      return "correction without a failed verification";
    if (e[i].kind == EntryKind::Act && config.step_check) {
      bool checked = false;
      for (std::size_t k = i; k-- > 0;) {
        if (e[k].kind == EntryKind::StepCheck) {
          checked = e[k].detail.value("decision", "") == "Continue" || e[k].detail.value("decision", "") == "Modify";
          break;
        }
        if (e[k].kind == EntryKind::Act || e[k].kind == EntryKind::Correct) break;
      }
      if (!checked) return "action without a preceding step-check";
    }
  }
  return std::nullopt;
}

}  // namespace testing
