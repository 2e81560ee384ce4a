#include "deskagent/agent_core.hpp"

#include <sstream>

namespace deskagent::agent {

namespace {

bool is_parse_error(const Error& e) {
  const std::string& c = e.code();
  return c == "PlanParseError" || c == "CritiqueParseError" || c == "DecisionParseError" ||
         c == "VerdictParseError" || c == "ActionParseError" || c == "OutOfBoundsAction" ||
         c == "ChooserParseError";
}

std::string join_history(const std::vector<std::string>& history) {
  if (history.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) out += "\n";
    out += history[i];
  }
  return out;
}

}  // namespace

std::string format_elements(const env::Observation& obs) {
  std::ostringstream out;
  for (const auto& m : obs.metadata) {
    auto c = m.bbox.center();
    out << "- " << env::to_string(m.role) << " \"" << m.label << "\" at (" << c.x << ", " << c.y << ")";
    if (m.selected) out << " selected";
    if (!std::holds_alternative<std::monostate>(m.value))
      out << " value=\"" << env::value_to_text(m.value) << "\"";
    out << "\n";
  }
  std::string s = out.str();
  return s.empty() ? "(none)" : s;
}

Agent::Agent(llm::Backend& backend, const llm::PromptSet& prompts, AgentConfig config)
    : backend_(backend), prompts_(prompts), config_(std::move(config)) {}

template <typename Parse>
auto Agent::ask(llm::ChatRequest request, Parse parse) -> decltype(parse(std::string())) {
  request.max_tokens = config_.max_tokens;
  for (int attempt = 0;; ++attempt) {
    std::string text = backend_.complete(request);
    try {
      return parse(text);
    } catch (const Error& e) {
      if (!is_parse_error(e) || attempt >= config_.parse_reasks) throw;
      llm::append_reask(request, text, e.what());
    }
  }
}

dsl::ActionScript Agent::ask_script(llm::ChatRequest request, env::ScreenSize screen) {
  return ask(std::move(request), [&](const std::string& text) {
    dsl::ActionScript script = parse_actor_output(text);
    auto violations = dsl::validate_bounds(script, screen);
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw OutOfBoundsAction("action " + std::to_string(v.index) + " targets (" + std::to_string(v.x) +
                              ", " + std::to_string(v.y) + ") outside the screen");
    }
    return script;
  });
}

Plan Agent::plan_initial(const std::string& query, const std::string& instruction_text,
                         const env::Observation& v0) {
  llm::PromptContext ctx;
  ctx.fields = {{"query", query}, {"instruction_text", instruction_text}, {"elements", format_elements(v0)}};
  ctx.images = {v0.screenshot};
  return ask(llm::render_prompt(prompts_, "planner", ctx),
             [](const std::string& text) { return parse_plan_text(text); });
}

std::pair<Plan, PlannerCriticOutput> Agent::critique_plan(const Plan& plan, const std::string& query,
                                                          const std::string& instruction_text,
                                                          const env::Observation& v0) {
  llm::PromptContext ctx;
  ctx.fields = {{"query", query},
                {"instruction_text", instruction_text},
                {"plan", plan_to_text(plan)},
                {"elements", format_elements(v0)}};
  ctx.images = {v0.screenshot};
  PlannerCriticOutput out = ask(llm::render_prompt(prompts_, "planner_critic", ctx),
                                [](const std::string& text) { return parse_critique(text); });
  if (out.flag) return {plan, out};
  return {*out.correction, out};
}

Agent::StepCheckResult Agent::step_check(const Subtask& subtask, const env::Observation& obs,
                                         const Plan& plan, const std::string& query) {
  auto ask_check = [&](const env::Observation& view, const std::string& region) {
    llm::PromptContext ctx;
    ctx.fields = {{"query", query},
                  {"plan", plan_to_text(plan)},
                  {"subtask", subtask.text},
                  {"region", region},
                  {"elements", format_elements(view)}};
    ctx.images = {view.screenshot};
    return ask(llm::render_prompt(prompts_, "step_check", ctx),
               [](const std::string& text) { return parse_decision(text); });
  };

  StepCheckResult result;
  result.decision = ask_check(obs, "");
  if (result.decision.kind != StepCheckDecision::Kind::CannotConfirm) return result;
  result.first_cannot_confirm = true;

  // Region search: pick an anchor element, crop around it and ask once more.
  auto elements = gui::parse_elements(obs);
  std::optional<gui::Match> anchor;
  try {
    llm::PromptContext ctx;
    ctx.fields = {{"subtask", subtask.text}, {"elements", format_elements(obs)}};
    std::string label = ask(llm::render_prompt(prompts_, "region_chooser", ctx),
                            [](const std::string& text) { return parse_chooser(text); });
    result.anchor_label = label;
    anchor = gui::locate_element(label, elements, config_.locate).front();
  } catch (const Error& e) {
    if (e.code() != "NoMatch" && e.code() != "ChooserParseError") throw;
  }
  if (!anchor) {
    try {
      anchor = gui::locate_element(subtask.text, elements, config_.locate).front();
    } catch (const gui::NoMatch&) {
      result.decision = {StepCheckDecision::Kind::Continue, {}};
      return result;
    }
  }

  env::ScreenSize screen{obs.screenshot.w, obs.screenshot.h};
  gui::CropRegion region = gui::region_search_crop(screen, anchor->element.bbox);
  result.region_searched = true;
  result.region = region;
  result.anchor_label = anchor->element.label;
  env::Observation cropped = gui::crop_observation(obs, region);
  std::string marker = "Region: [" + std::to_string(region.x0) + ", " + std::to_string(region.y0) + ") - [" +
                       std::to_string(region.x1) + ", " + std::to_string(region.y1) + ") around \"" +
                       anchor->element.label + "\"\n";
  result.decision = ask_check(cropped, marker);
  if (result.decision.kind == StepCheckDecision::Kind::CannotConfirm)
    result.decision = {StepCheckDecision::Kind::Continue, {}};
  return result;
}

dsl::ActionScript Agent::act(const Subtask& subtask, const env::Observation& obs,
                             const std::vector<std::string>& history, env::ScreenSize screen) {
  llm::PromptContext ctx;
  ctx.fields = {{"subtask", subtask.text}, {"history", join_history(history)}, {"elements", format_elements(obs)}};
  ctx.images = {obs.screenshot};
  return ask_script(llm::render_prompt(prompts_, "actor", ctx), screen);
}

ActorCriticVerdict Agent::verify_action(const Subtask& subtask, const dsl::ActionScript& action,
                                        const env::Observation& before, const env::Observation& after) {
  llm::PromptContext ctx;
  bool changed = before.screenshot.digest != after.screenshot.digest;
  ctx.fields = {{"subtask", subtask.text},
                {"action", dsl::serialize_script(action)},
                {"changed", changed ? "yes" : "no"}};
  ctx.images = {before.screenshot, after.screenshot};
  return ask(llm::render_prompt(prompts_, "actor_critic", ctx),
             [](const std::string& text) { return parse_verdict(text); });
}

Agent::Correction Agent::correct_action(const Subtask& subtask, const ActorCriticVerdict& verdict,
                                        const dsl::ActionScript& failed, const env::Observation& obs,
                                        env::ScreenSize screen) {
  const std::string query = verdict.target.value_or(subtask.text);
  gui::Match located;
  try {
    located = gui::locate_element(query, gui::parse_elements(obs), config_.locate).front();
  } catch (const gui::NoMatch& e) {
    throw CorrectionFailed(e.what());
  }
  llm::PromptContext ctx;
  ctx.fields = {{"subtask", subtask.text},
                {"action", dsl::serialize_script(failed)},
                {"feedback", verdict.feedback},
                {"target_label", located.element.label},
                {"target_x", std::to_string(located.element.center.x)},
                {"target_y", std::to_string(located.element.center.y)},
                {"elements", format_elements(obs)}};
  ctx.images = {obs.screenshot};
  return {ask_script(llm::render_prompt(prompts_, "actor_correction", ctx), screen), located};
}

namespace {

class EpisodeRunner {
 public:
  EpisodeRunner(const TaskContext& task, const env::EnvState& initial, llm::Backend& backend,
                const llm::PromptSet& prompts, const AgentConfig& config)
      : task_(task), state_(initial), agent_(backend, prompts, config), config_(config) {
    trace_.task_id = task.task_id;
    trace_.scenario = task.scenario_ref;
    trace_.pre_actions = task.pre_actions;
  }

  EpisodeResult run() {
    try {
      loop();
    } catch (const std::exception& e) {
      const auto* err = dynamic_cast<const Error*>(&e);
      fail(err ? err->code() + ": " + e.what() : std::string(e.what()));
    }
    EpisodeResult result;
    result.reward = task_.evaluator ? task_.evaluator(state_) : 0;
    trace_.reward = result.reward;
    auto& end = record(EntryKind::EpisodeEnd, status_ == "done" ? LoopState::Done : LoopState::Failed, "");
    end.detail = {{"reward", result.reward}, {"status", status_}};
    if (!trace_.failure.empty()) end.detail["failure"] = trace_.failure;
    trace_.status = status_;
    result.trace = std::move(trace_);
    result.final_state = std::move(state_);
    result.plan = std::move(plan_);
    return result;
  }

 private:
  TraceEntry& record(EntryKind kind, LoopState state, const std::string& subtask_id) {
    TraceEntry e;
    e.t = static_cast<int>(trace_.entries.size());
    e.kind = kind;
    e.loop_state = state;
    e.subtask_id = subtask_id;
    trace_.entries.push_back(std::move(e));
    return trace_.entries.back();
  }

  void fail(const std::string& reason) {
    status_ = "failed";
    trace_.failure = reason;
  }

  env::Observation observe() const { return env::observe(state_); }

  // Executes a script atomically and records it; returns the before/after observations.
  std::pair<env::Observation, env::Observation> execute(EntryKind kind, LoopState ls, const Subtask& s,
                                                         const dsl::ActionScript& script, nlohmann::json detail) {
    env::Observation before = observe();
    state_ = env::run_script(state_, script);
    env::Observation after = observe();
    std::string text = dsl::serialize_script(script);
    history_.push_back(text);
    auto& e = record(kind, ls, s.id);
    e.detail = std::move(detail);
    e.action = text;
    e.obs_before = env::digest_hex(before.screenshot.digest);
    e.obs_after = env::digest_hex(after.screenshot.digest);
    return {std::move(before), std::move(after)};
  }

  bool budget_left() {
    if (budgets().loop_iterations < budgets().iteration_limit) {
      ++budgets().loop_iterations;
      return true;
    }
    budgets().exhausted = true;
    auto& e = record(EntryKind::BudgetExhausted, LoopState::Failed, "");
    e.detail = {{"loop_iterations", budgets().loop_iterations}, {"limit", budgets().iteration_limit}};
    status_ = "budget_exhausted";
    return false;
  }

  BudgetSummary& budgets() { return trace_.budgets; }

  void loop() {
    env::Observation v0 = observe();
    plan_ = agent_.plan_initial(task_.query, task_.instruction_text, v0);
    record(EntryKind::Plan, LoopState::Continue, "").detail = {{"plan", plan_to_json(plan_)}};

    if (config_.planner_critic) {
      auto [working, out] = agent_.critique_plan(plan_, task_.query, task_.instruction_text, v0);
      plan_ = std::move(working);
      auto& e = record(EntryKind::Critique, LoopState::Continue, "");
      e.detail = {{"flag", out.flag}, {"reason", out.reason}, {"plan", plan_to_json(plan_)}};
      e.detail["feedback"] = out.feedback ? nlohmann::json(std::string(to_string(*out.feedback))) : nlohmann::json();
    }

    budgets().n = plan_.size();
    budgets().iteration_limit = config_.budget_multiplier * plan_.size() + 1;

    std::size_t i = 0;
    while (i < plan_.size()) {
      if (!budget_left()) return;
      if (!run_subtask(i)) return;
      ++i;
    }
  }

  // Processes the subtask at flat index i. Returns false when the loop must stop.
  bool run_subtask(std::size_t i) {
    const env::ScreenSize screen = state_.screen;
    if (config_.step_check) {
      Subtask current = plan_.at(i);
      auto check = agent_.step_check(current, observe(), plan_, task_.query);
      if (check.region_searched) {
        auto& r = record(EntryKind::RegionSearch, LoopState::Continue, current.id);
        r.detail = {{"anchor", check.anchor_label.value_or("")},
                    {"region", {check.region->x0, check.region->y0, check.region->x1, check.region->y1}}};
      }
      using K = StepCheckDecision::Kind;
      const K kind = check.decision.kind;
      const bool skip = kind == K::Finished || kind == K::Pass;
      auto& e = record(EntryKind::StepCheck, skip ? LoopState::Next : LoopState::Continue, current.id);
      e.detail = {{"decision", std::string(to_string(kind))}, {"region_search", check.region_searched}};
      if (skip) {
        plan_.at(i).status = SubtaskStatus::Skipped;
        return true;
      }
      if (kind == K::Modify) {
        std::vector<Subtask> replacement;
        for (std::size_t k = 0; k < check.decision.replacement.size(); ++k)
          replacement.push_back({current.id + "." + std::to_string(k + 1), check.decision.replacement[k],
                                 SubtaskStatus::Pending});
        e.detail["replacement"] = check.decision.replacement;
        plan_.splice(i, std::move(replacement));
      }
    }

    Subtask& s = plan_.at(i);
    const std::string id = s.id;
    dsl::ActionScript script = agent_.act(s, observe(), history_, screen);
    LoopState act_state = config_.literal_pseudocode && config_.actor_critic ? LoopState::Critic : LoopState::Continue;
    auto [before, after] = execute(EntryKind::Act, act_state, s, script, nlohmann::json::object());

    if (!config_.actor_critic) {
      plan_.at(i).status = SubtaskStatus::Done;
      return true;
    }

    int& z = budgets().critic_trials[id];
    auto verify = [&](const dsl::ActionScript& c, const env::Observation& b, const env::Observation& a) {
      ActorCriticVerdict v = agent_.verify_action(plan_.at(i), c, b, a);
      auto& e = record(EntryKind::Verify, v.success ? LoopState::Next : LoopState::Critic, id);
      e.detail = {{"success", v.success}, {"feedback", v.feedback}, {"z", z}};
      e.detail["target"] = v.target ? nlohmann::json(*v.target) : nlohmann::json();
      return v;
    };

    ActorCriticVerdict verdict = verify(script, before, after);
    while (!verdict.success) {
      if (z >= config_.max_critic_trials) return subtask_failed(i, "critic trials exhausted");
      if (!budget_left()) return false;
      ++z;
      ++budgets().total_critic_trials;
      Agent::Correction fix;
      try {
        fix = agent_.correct_action(plan_.at(i), verdict, script, observe(), screen);
      } catch (const CorrectionFailed& e) {
        return subtask_failed(i, std::string("correction failed: ") + e.what());
      }
      script = fix.script;
      nlohmann::json detail = {{"target", fix.located.element.label},
                               {"center", {fix.located.element.center.x, fix.located.element.center.y}},
                               {"z", z}};
      std::tie(before, after) = execute(EntryKind::Correct, LoopState::Critic, plan_.at(i), script, detail);
      verdict = verify(script, before, after);
    }
    plan_.at(i).status = SubtaskStatus::Done;
    return true;
  }

  bool subtask_failed(std::size_t i, const std::string& reason) {
    plan_.at(i).status = SubtaskStatus::Failed;
    const bool abort = config_.abort_on_exhaustion;
    auto& e = record(EntryKind::SubtaskFailed, abort ? LoopState::Failed : LoopState::Next, plan_.at(i).id);
    e.detail = {{"reason", reason}};
    if (abort) fail("subtask " + plan_.at(i).id + " failed: " + reason);
    return !abort;
  }

  const TaskContext& task_;
  env::EnvState state_;
  Agent agent_;
  AgentConfig config_;
  Plan plan_;
  EpisodeTrace trace_;
  std::vector<std::string> history_;
  std::string status_ = "done";
};

}  // namespace

EpisodeResult run_episode(const TaskContext& task, const env::EnvState& initial, llm::Backend& backend,
                          const llm::PromptSet& prompts, const AgentConfig& config) {
  return EpisodeRunner(task, initial, backend, prompts, config).run();
}

}  // namespace deskagent::agent
