#include <doctest.h>

#include "support.hpp"

using namespace deskagent;
using namespace deskagent::agent;
using llm::RoleTag;
using llm::ScriptedRule;

namespace {

std::size_t count_kind(const EpisodeTrace& t, EntryKind k) {
  return static_cast<std::size_t>(std::count_if(t.entries.begin(), t.entries.end(), [&](const TraceEntry& e) { return e.kind == k; }));
}

/// Counts calls per role on top of another backend.
class CountingBackend final : public llm::Backend {
 public:
  explicit CountingBackend(llm::Backend& inner) : inner_(inner) {}
  std::string complete(const llm::ChatRequest& r) override {
    ++calls[r.role];
    return inner_.complete(r);
  }
  std::map<RoleTag, int> calls;

 private:
  llm::Backend& inner_;
};

std::vector<ScriptedRule> with_front(std::vector<ScriptedRule> front, std::vector<ScriptedRule> rest) {
  front.insert(front.end(), rest.begin(), rest.end());
  return front;
}

}  // namespace

TEST_CASE("plan text parsing") {
  Plan p = parse_plan_text("Milestone 1: Select\n1. Select cells A1 to K1\n2. Click on Merge & Center\n"
                           "Milestone 2: Format\n1. Click on Bold\n");
  REQUIRE(p.milestones.size() == 2);
  CHECK(p.size() == 3);
  CHECK(p.at(0).id == "s1");
  CHECK(p.at(2).id == "s3");
  CHECK(p.at(2).text == "Click on Bold");
  CHECK(parse_plan_text(plan_to_text(p)) == p);

  Plan loose = parse_plan_text("1. Open the menu\n2) Pick Red\n");
  CHECK(loose.size() == 2);
  CHECK_THROWS_AS(parse_plan_text("nothing numbered here"), PlanParseError);

  Plan s = p;
  s.splice(1, {{"s2.1", "a", SubtaskStatus::Pending}, {"s2.2", "b", SubtaskStatus::Pending}});
  CHECK(s.size() == 4);
  CHECK(s.at(1).id == "s2.1");
  CHECK(s.at(3).id == "s3");
}

TEST_CASE("critique parsing") {
  auto ok = parse_critique("<Flag>True</Flag>\n<Reason>fine</Reason>");
  CHECK(ok.flag);
  CHECK(ok.reason == "fine");
  auto bad = parse_critique("<Flag>False</Flag><Feedback>Redundant Steps</Feedback><Correction>\n1. Click on Bold\n</Correction><Reason>r</Reason>");
  CHECK_FALSE(bad.flag);
  CHECK(bad.feedback == FeedbackKind::RedundantSteps);
  REQUIRE(bad.correction);
  CHECK(bad.correction->size() == 1);
  CHECK_THROWS_AS(parse_critique("<Flag>False</Flag><Reason>no correction</Reason>"), CritiqueParseError);
  CHECK_THROWS_AS(parse_critique("looks good"), CritiqueParseError);
}

TEST_CASE("step-check decision parsing") {
  using K = StepCheckDecision::Kind;
  CHECK(parse_decision("<Continue>\nok").kind == K::Continue);
  CHECK(parse_decision("<Pass> already set").kind == K::Pass);
  CHECK(parse_decision("<Finished>").kind == K::Finished);
  CHECK(parse_decision("#Cannot confirm\nunclear").kind == K::CannotConfirm);
  auto m = parse_decision("<Modify>\n1. Close the menu\n2. Click on Bold\n</Modify>");
  CHECK(m.kind == K::Modify);
  CHECK(m.replacement == std::vector<std::string>{"Close the menu", "Click on Bold"});
  CHECK_THROWS_AS(parse_decision("<Modify>\n</Modify>"), DecisionParseError);
  CHECK_THROWS_AS(parse_decision("maybe"), DecisionParseError);
}

TEST_CASE("verdict, actor and chooser parsing") {
  auto v = parse_verdict("<Success>False</Success>\n<Feedback>missed</Feedback>\n<Target>Merge & Center</Target>");
  CHECK_FALSE(v.success);
  CHECK(v.feedback == "missed");
  CHECK(v.target == std::optional<std::string>("Merge & Center"));
  CHECK(parse_verdict("<Success>True</Success>").success);
  CHECK_THROWS_AS(parse_verdict("yes"), VerdictParseError);

  auto s = parse_actor_output("```python\nclick(412, 187)\n```");
  REQUIRE(s.actions.size() == 1);
  CHECK(s.actions[0] == dsl::Action{dsl::Click{412, 187}});
  CHECK_THROWS_AS(parse_actor_output("I would click the button"), ActionParseError);

  CHECK(parse_chooser("<Element>Font Color</Element>") == "Font Color");
  CHECK_THROWS_AS(parse_chooser("Font Color"), ChooserParseError);
  CHECK(extract_tag("<A>x\n<B>y</B>", "A") == std::optional<std::string>("x"));
}

TEST_CASE("oracle episodes succeed and satisfy the trace invariants") {
  for (const auto& t : testing::suite()) {
    INFO(t.id);
    auto r = testing::run_oracle(t.id);
    CHECK(r.reward == 1);
    CHECK(r.trace.status == "done");
    auto v = testing::trace_violation(r.trace, AgentConfig{});
    CHECK_MESSAGE(!v, v.value_or(""));
  }
}

TEST_CASE("skipped subtasks have no actions") {
  for (const auto& t : testing::suite()) {
    std::set<std::string> resolved;
    for (const auto& s : t.gt_plan.flattened())
      if (s.status != SubtaskStatus::Pending) resolved.insert(s.id);
    if (resolved.empty()) continue;
    INFO(t.id);
    auto r = testing::run_oracle(t.id);
    std::size_t skips = 0;
    for (const auto& e : r.trace.entries) {
      if (e.kind == EntryKind::StepCheck && resolved.count(e.subtask_id)) {
        const std::string d = e.detail.value("decision", "");
        CHECK((d == "Finished" || d == "Pass"));
        CHECK(e.loop_state == LoopState::Next);
        ++skips;
      }
      if (e.action) CHECK(resolved.count(e.subtask_id) == 0);
    }
    CHECK(skips == resolved.size());
  }
}

TEST_CASE("actor correction uses the located element") {
  auto r = testing::run_oracle("excel_merge", {true, false, ""});
  CHECK(r.reward == 1);
  bool seen = false;
  for (const auto& e : r.trace.entries)
    if (e.kind == EntryKind::Correct && e.subtask_id == "s2") {
      seen = true;
      CHECK(e.action == std::optional<std::string>("click(412, 187)"));
      CHECK(e.detail["target"] == "Merge & Center");
      CHECK(e.detail["center"] == nlohmann::json::array({412, 187}));
    }
  CHECK(seen);
  for (const auto& [id, z] : r.trace.budgets.critic_trials) CHECK(z == 1);
}

TEST_CASE("a stubborn subtask reaches exactly the trial cap") {
  auto r = testing::run_oracle("excel_merge", {true, false, "s2"});
  CHECK(r.reward == 1);
  CHECK(r.trace.budgets.critic_trials.at("s2") == 3);
  CHECK_FALSE(testing::trace_violation(r.trace, AgentConfig{}));
}

TEST_CASE("exhausted critic trials fail the subtask") {
  const auto& t = testing::task("excel_merge");
  std::vector<ScriptedRule> misses;
  for (int k = 0; k < 3; ++k)
    misses.push_back({RoleTag::Actor, {"Actor Correction\n", "Click on Merge & Center"}, {}, "moveTo(412, 187)", true});
  auto rules = with_front(misses, bench::oracle_rules(t, testing::suite(), {true, false, ""}));

  auto r = testing::run_with_rules(t, rules);
  CHECK(r.reward == 0);
  CHECK(r.trace.budgets.critic_trials.at("s2") == 3);
  CHECK(count_kind(r.trace, EntryKind::SubtaskFailed) == 1);
  CHECK(r.trace.status == "done");
  CHECK_FALSE(testing::trace_violation(r.trace, AgentConfig{}));

  AgentConfig abort;
  abort.abort_on_exhaustion = true;
  auto a = testing::run_with_rules(t, rules, abort);
  CHECK(a.trace.status == "failed");
  CHECK(a.trace.failure.find("s2") != std::string::npos);
}

TEST_CASE("module ablations") {
  AgentConfig no_actor_critic;
  no_actor_critic.actor_critic = false;
  CHECK(testing::run_oracle("excel_merge", {true, false, ""}, no_actor_critic).reward == 0);
  CHECK(testing::run_oracle("excel_merge", {true, false, ""}).reward == 1);

  AgentConfig no_step_check;
  no_step_check.step_check = false;
  CHECK(testing::run_oracle("ppt_text_style-trim", {}, no_step_check).reward == 0);
  CHECK(testing::run_oracle("excel_merge-adjust", {}, no_step_check).reward == 0);

  AgentConfig no_planner_critic;
  no_planner_critic.planner_critic = false;
  CHECK(testing::run_oracle("excel_merge", {false, true, ""}, no_planner_critic).reward == 0);
  auto fixed = testing::run_oracle("excel_merge", {false, true, ""});
  CHECK(fixed.reward == 1);
  CHECK(count_kind(fixed.trace, EntryKind::Critique) == 1);
  CHECK(fixed.trace.budgets.n == 3);
}

TEST_CASE("literal pseudocode mode enters the critic state after acting") {
  AgentConfig literal;
  literal.literal_pseudocode = true;
  auto r = testing::run_oracle("web_form", {}, literal);
  CHECK(r.reward == 1);
  for (const auto& e : r.trace.entries)
    if (e.kind == EntryKind::Act) CHECK(e.loop_state == LoopState::Critic);
  auto d = testing::run_oracle("web_form");
  for (const auto& e : d.trace.entries)
    if (e.kind == EntryKind::Act) CHECK(e.loop_state == LoopState::Continue);
}

TEST_CASE("region search runs at most once per check") {
  auto r = testing::run_oracle("ppt_text_style-trim");
  CHECK(count_kind(r.trace, EntryKind::RegionSearch) == 1);
  for (const auto& e : r.trace.entries)
    if (e.kind == EntryKind::RegionSearch) {
      auto reg = e.detail["region"];
      CHECK(reg[2].get<int>() - reg[0].get<int>() <= 960);
      CHECK(reg[3].get<int>() - reg[1].get<int>() <= 540);
      CHECK(e.detail["anchor"] == "Font Color");
    }

  // A model that can never confirm: one crop per subtask, then continue.
  const auto& t = testing::task("web_form");
  auto rules = with_front({{RoleTag::StepCheck, {}, {}, "#Cannot confirm", false},
                           {RoleTag::RegionChooser, {}, {}, "<Element>Submit</Element>", false}},
                          bench::oracle_rules(t, testing::suite()));
  llm::ScriptedBackend inner(rules);
  CountingBackend counting(inner);
  auto prompts = llm::PromptSet::defaults();
  auto e = run_episode(testing::context_for(t), bench::materialize(t), counting, prompts);
  CHECK(e.reward == 1);
  const int n = static_cast<int>(e.trace.budgets.n);
  CHECK(counting.calls[RoleTag::StepCheck] == 2 * n);
  CHECK(counting.calls[RoleTag::RegionChooser] == n);
}

TEST_CASE("malformed replies are re-asked a bounded number of times") {
  const auto& t = testing::task("excel_merge");
  const auto oracle = bench::oracle_rules(t, testing::suite());

  auto once = testing::run_with_rules(t, with_front({{RoleTag::Planner, {}, {}, "I will do it.", true}}, oracle));
  CHECK(once.reward == 1);

  llm::ScriptedBackend inner(with_front({{RoleTag::Planner, {}, {}, "I will do it.", false}}, oracle));
  CountingBackend counting(inner);
  auto prompts = llm::PromptSet::defaults();
  auto never = run_episode(testing::context_for(t), bench::materialize(t), counting, prompts);
  CHECK(never.reward == 0);
  CHECK(never.trace.status == "failed");
  CHECK(never.trace.failure.find("PlanParseError") != std::string::npos);
  CHECK(counting.calls[RoleTag::Planner] == 3);

  auto oob = testing::run_with_rules(t, with_front({{RoleTag::Actor, {}, {}, "click(5000, 5000)", true}}, oracle));
  CHECK(oob.reward == 1);
}

TEST_CASE("backend failures end the episode with the evaluator's verdict") {
  const auto& t = testing::task("excel_merge");
  auto r = testing::run_with_rules(t, {});
  CHECK(r.trace.status == "failed");
  CHECK(r.trace.failure.find("NoScriptedMatch") != std::string::npos);
  CHECK(r.reward == 0);
  CHECK(r.trace.entries.back().kind == EntryKind::EpisodeEnd);
}

TEST_CASE("loop iterations are capped") {
  AgentConfig tight;
  tight.budget_multiplier = 0;
  auto r = testing::run_oracle("excel_merge", {}, tight);
  CHECK(r.trace.budgets.iteration_limit == 1);
  CHECK(r.trace.budgets.loop_iterations == 1);
  CHECK(r.trace.budgets.exhausted);
  CHECK(r.reward == 0);
  CHECK(count_kind(r.trace, EntryKind::BudgetExhausted) == 1);
}

TEST_CASE("episodes are deterministic") {
  for (const char* id : {"excel_merge-adjust", "ppt_text_style-trim", "settings_panel-popup"}) {
    auto a = testing::run_oracle(id, {true, false, ""});
    auto b = testing::run_oracle(id, {true, false, ""});
    CHECK(trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace));
  }
}
