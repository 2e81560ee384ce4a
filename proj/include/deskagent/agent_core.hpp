#pragma once

// The reasoning loop: planner, planner-critic, step-check (with region
// search), actor and actor-critic (with element location and correction).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deskagent/action_dsl.hpp"
#include "deskagent/gui_context.hpp"
#include "deskagent/llm_gateway.hpp"
#include "deskagent/plan.hpp"
#include "deskagent/sim_env.hpp"
#include "deskagent/trace.hpp"

namespace deskagent::agent {

struct AgentConfig {
  int max_critic_trials = 3;
  int parse_reasks = 2;  // re-asks after the first malformed reply
  std::size_t budget_multiplier = 4;  // loop iterations capped at multiplier * N + 1
  bool planner_critic = true;
  bool step_check = true;
  bool actor_critic = true;
  /// Enter the critic state right after every actor execution, as the loop
  /// pseudocode reads; the default verifies first.
  bool literal_pseudocode = false;
  bool abort_on_exhaustion = false;
  gui::LocateOptions locate;
  int max_tokens = 1024;
};

struct TaskContext {
  std::string task_id;
  std::string query;
  std::string instruction_text;
  std::string scenario_ref;
  std::string pre_actions;
  std::function<int(const env::EnvState&)> evaluator;
};

class OutOfBoundsAction : public Error {
 public:
  explicit OutOfBoundsAction(const std::string& message) : Error("OutOfBoundsAction", message) {}
};

class CorrectionFailed : public Error {
 public:
  explicit CorrectionFailed(const std::string& message) : Error("CorrectionFailed", message) {}
};

/// Element list as given to the model: one line per metadata entry.
std::string format_elements(const env::Observation& obs);

/// The five modules bound to one backend and prompt set.
class Agent {
 public:
  Agent(llm::Backend& backend, const llm::PromptSet& prompts, AgentConfig config = {});

  Plan plan_initial(const std::string& query, const std::string& instruction_text,
                    const env::Observation& v0);

  /// Returns the working plan and the critic's output.
  std::pair<Plan, PlannerCriticOutput> critique_plan(const Plan& plan, const std::string& query,
                                                     const std::string& instruction_text,
                                                     const env::Observation& v0);

  struct StepCheckResult {
    StepCheckDecision decision;
    bool region_searched = false;
    std::optional<std::string> anchor_label;
    std::optional<gui::CropRegion> region;
    bool first_cannot_confirm = false;
  };

  StepCheckResult step_check(const Subtask& subtask, const env::Observation& obs, const Plan& plan,
                             const std::string& query);

  dsl::ActionScript act(const Subtask& subtask, const env::Observation& obs,
                        const std::vector<std::string>& history, env::ScreenSize screen);

  ActorCriticVerdict verify_action(const Subtask& subtask, const dsl::ActionScript& action,
                                   const env::Observation& before, const env::Observation& after);

  struct Correction {
    dsl::ActionScript script;
    gui::Match located;
  };

  Correction correct_action(const Subtask& subtask, const ActorCriticVerdict& verdict,
                            const dsl::ActionScript& failed, const env::Observation& obs,
                            env::ScreenSize screen);

  const AgentConfig& config() const { return config_; }

 private:
  template <typename Parse>
  auto ask(llm::ChatRequest request, Parse parse) -> decltype(parse(std::string()));

  dsl::ActionScript ask_script(llm::ChatRequest request, env::ScreenSize screen);

  llm::Backend& backend_;
  const llm::PromptSet& prompts_;
  AgentConfig config_;
};

struct EpisodeResult {
  int reward = 0;
  EpisodeTrace trace;
  env::EnvState final_state;
  Plan plan;
};

/// Runs one episode from `initial` (pre-actions already applied). Parse and
/// backend errors end the loop as failed; the reward is always the
/// evaluator's verdict on the final state.
EpisodeResult run_episode(const TaskContext& task, const env::EnvState& initial, llm::Backend& backend,
                          const llm::PromptSet& prompts, const AgentConfig& config = {});

}  // namespace deskagent::agent
