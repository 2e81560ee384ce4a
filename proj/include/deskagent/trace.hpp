#pragma once

// Episode traces: an ordered, timestamp-free record of every loop decision,
// serialized as versioned JSON lines.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deskagent/sim_env.hpp"

namespace deskagent::agent {

enum class LoopState { Continue, Next, Critic, Done, Failed };

std::string_view to_string(LoopState s);
std::optional<LoopState> loop_state_from_string(std::string_view s);

enum class EntryKind {
  Plan,
  Critique,
  StepCheck,
  RegionSearch,
  Act,
  Verify,
  Correct,
  SubtaskFailed,
  BudgetExhausted,
  EpisodeEnd,
};

std::string_view to_string(EntryKind k);
std::optional<EntryKind> entry_kind_from_string(std::string_view s);

struct TraceEntry {
  int t = 0;
  EntryKind kind = EntryKind::Plan;
  LoopState loop_state = LoopState::Continue;
  std::string subtask_id;
  nlohmann::json detail = nlohmann::json::object();
  std::optional<std::string> action;   // serialized script C_t
  std::optional<std::string> obs_before;  // screenshot digest (hex)
  std::optional<std::string> obs_after;
};

struct BudgetSummary {
  std::size_t n = 0;  // flattened subtask count after the planner-critic
  std::size_t loop_iterations = 0;
  std::size_t iteration_limit = 0;
  std::map<std::string, int> critic_trials;  // subtask id -> corrections used
  int total_critic_trials = 0;
  bool exhausted = false;
};

struct EpisodeTrace {
  static constexpr int kVersion = 1;
  std::string task_id;
  std::string scenario;
  std::string pre_actions;
  std::vector<TraceEntry> entries;
  BudgetSummary budgets;
  int reward = 0;
  std::string status;   // "done" or "failed"
  std::string failure;  // reason when failed
};

std::string trace_to_jsonl(const EpisodeTrace& trace);
EpisodeTrace trace_from_jsonl(std::string_view text);

struct ReplayResult {
  bool ok = true;
  std::size_t actions_replayed = 0;
  std::vector<std::string> mismatches;
  env::EnvState final_state;
};

/// Re-executes every recorded action script against `initial` and checks the
/// recorded before/after screenshot digests.
ReplayResult replay_trace(const EpisodeTrace& trace, const env::EnvState& initial);

}  // namespace deskagent::agent
