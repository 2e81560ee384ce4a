#include "deskagent/trace.hpp"

#include <sstream>

namespace deskagent::agent {

using nlohmann::json;

namespace {

constexpr std::pair<LoopState, std::string_view> kStates[] = {
    {LoopState::Continue, "Continue"}, {LoopState::Next, "Next"},     {LoopState::Critic, "Critic"},
    {LoopState::Done, "Done"},         {LoopState::Failed, "Failed"},
};

constexpr std::pair<EntryKind, std::string_view> kKinds[] = {
    {EntryKind::Plan, "plan"},
    {EntryKind::Critique, "critique"},
    {EntryKind::StepCheck, "step_check"},
    {EntryKind::RegionSearch, "region_search"},
    {EntryKind::Act, "act"},
    {EntryKind::Verify, "verify"},
    {EntryKind::Correct, "correct"},
    {EntryKind::SubtaskFailed, "subtask_failed"},
    {EntryKind::BudgetExhausted, "budget_exhausted"},
    {EntryKind::EpisodeEnd, "episode_end"},
};

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(); }

std::optional<std::string> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string_view to_string(LoopState s) {
  for (const auto& [k, n] : kStates)
    if (k == s) return n;
  return "Continue";
}

std::optional<LoopState> loop_state_from_string(std::string_view s) {
  for (const auto& [k, n] : kStates)
    if (n == s) return k;
  return std::nullopt;
}

std::string_view to_string(EntryKind k) {
  for (const auto& [e, n] : kKinds)
    if (e == k) return n;
  return "plan";
}

std::optional<EntryKind> entry_kind_from_string(std::string_view s) {
  for (const auto& [e, n] : kKinds)
    if (n == s) return e;
  return std::nullopt;
}

std::string trace_to_jsonl(const EpisodeTrace& trace) {
  std::string out;
  json header = {{"v", EpisodeTrace::kVersion},
                 {"type", "header"},
                 {"task_id", trace.task_id},
                 {"scenario", trace.scenario},
                 {"pre_actions", trace.pre_actions}};
  out += header.dump() + "\n";
  for (const auto& e : trace.entries) {
    json j = {{"v", EpisodeTrace::kVersion},
              {"type", "entry"},
              {"t", e.t},
              {"kind", std::string(to_string(e.kind))},
              {"loop_state", std::string(to_string(e.loop_state))},
              {"subtask_id", e.subtask_id},
              {"detail", e.detail},
              {"action", opt(e.action)},
              {"obs_before", opt(e.obs_before)},
              {"obs_after", opt(e.obs_after)}};
    out += j.dump() + "\n";
  }
  const auto& b = trace.budgets;
  json summary = {{"v", EpisodeTrace::kVersion},
                  {"type", "summary"},
                  {"n", b.n},
                  {"loop_iterations", b.loop_iterations},
                  {"iteration_limit", b.iteration_limit},
                  {"critic_trials", b.critic_trials},
                  {"total_critic_trials", b.total_critic_trials},
                  {"exhausted", b.exhausted},
                  {"reward", trace.reward},
                  {"status", trace.status},
                  {"failure", trace.failure}};
  out += summary.dump() + "\n";
  return out;
}

EpisodeTrace trace_from_jsonl(std::string_view text) {
  EpisodeTrace trace;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("TraceFormatError", "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.value("v", 0) != EpisodeTrace::kVersion)
      throw Error("TraceFormatError", "line " + std::to_string(lineno) + ": unsupported version");
    const std::string type = j.value("type", "");
    try {
      if (type == "header") {
        trace.task_id = j.at("task_id").get<std::string>();
        trace.scenario = j.at("scenario").get<std::string>();
        trace.pre_actions = j.at("pre_actions").get<std::string>();
      } else if (type == "entry") {
        TraceEntry e;
        e.t = j.at("t").get<int>();
        auto kind = entry_kind_from_string(j.at("kind").get<std::string>());
        auto state = loop_state_from_string(j.at("loop_state").get<std::string>());
        if (!kind || !state) throw Error("TraceFormatError", "unknown kind or loop state");
        e.kind = *kind;
        e.loop_state = *state;
        e.subtask_id = j.at("subtask_id").get<std::string>();
        e.detail = j.at("detail");
        e.action = opt_from(j, "action");
        e.obs_before = opt_from(j, "obs_before");
        e.obs_after = opt_from(j, "obs_after");
        trace.entries.push_back(std::move(e));
      } else if (type == "summary") {
        auto& b = trace.budgets;
        b.n = j.at("n").get<std::size_t>();
        b.loop_iterations = j.at("loop_iterations").get<std::size_t>();
        b.iteration_limit = j.at("iteration_limit").get<std::size_t>();
        b.critic_trials = j.at("critic_trials").get<std::map<std::string, int>>();
        b.total_critic_trials = j.at("total_critic_trials").get<int>();
        b.exhausted = j.at("exhausted").get<bool>();
        trace.reward = j.at("reward").get<int>();
        trace.status = j.at("status").get<std::string>();
        trace.failure = j.at("failure").get<std::string>();
      } else {
        throw Error("TraceFormatError", "unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error("TraceFormatError", "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

ReplayResult replay_trace(const EpisodeTrace& trace, const env::EnvState& initial) {
  ReplayResult r;
  env::EnvState state = initial;
  for (const auto& e : trace.entries) {
    if (!e.action) continue;
    std::string where = "t=" + std::to_string(e.t) + " (" + std::string(to_string(e.kind)) + ")";
    std::string before = env::digest_hex(env::observe(state).screenshot.digest);
    if (e.obs_before && *e.obs_before != before)
      r.mismatches.push_back(where + ": before digest " + before + " != recorded " + *e.obs_before);
    state = env::run_script(state, dsl::parse_script(*e.action));
    std::string after = env::digest_hex(env::observe(state).screenshot.digest);
    if (e.obs_after && *e.obs_after != after)
      r.mismatches.push_back(where + ": after digest " + after + " != recorded " + *e.obs_after);
    ++r.actions_replayed;
  }
  r.ok = r.mismatches.empty();
  r.final_state = std::move(state);
  return r;
}

}  // namespace deskagent::agent
