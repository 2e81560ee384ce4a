// deskagent: run, replay, augment, report, validate and oracle subcommands.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "deskagent/bench_harness.hpp"

namespace fs = std::filesystem;
using namespace deskagent;

namespace {

constexpr int kOk = 0;
constexpr int kTaskError = 1;
constexpr int kConfigError = 2;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::unique_ptr<llm::BackendProvider> make_backend(const std::string& spec, const std::vector<bench::TaskSpec>& tasks,
                                                   const std::optional<fs::path>& gateway_config) {
  if (spec == "oracle") return std::make_unique<bench::OracleProvider>(tasks);
  if (spec == "http") return std::make_unique<llm::HttpProvider>(llm::load_http_config(gateway_config));
  if (spec.rfind("scripted:", 0) == 0) {
    fs::path path = spec.substr(9);
    if (!fs::exists(path)) throw llm::ConfigError("scripted backend path not found: " + path.string());
    return std::make_unique<llm::ScriptedProvider>(path);
  }
  throw llm::ConfigError("unknown backend '" + spec + "' (expected scripted:<path>, http or oracle)");
}

int cmd_run(const fs::path& manifest, const std::string& backend_spec, std::size_t parallel, const fs::path& out,
            const std::vector<std::string>& disable, const std::vector<std::string>& only, bool persist,
            bool literal, const std::optional<fs::path>& prompts, const std::optional<fs::path>& gateway_config) {
  std::vector<bench::TaskSpec> tasks = bench::load_tasks(manifest);
  if (!only.empty()) {
    std::vector<bench::TaskSpec> picked;
    for (const auto& id : only) {
      auto it = std::find_if(tasks.begin(), tasks.end(), [&](const bench::TaskSpec& t) { return t.id == id; });
      if (it == tasks.end()) throw bench::ManifestError(id, "id", "not in the manifest");
      picked.push_back(*it);
    }
    tasks = std::move(picked);
  }
  bench::SuiteOptions options;
  options.parallelism = parallel;
  options.persist_prefs = persist;
  options.prompts_dir = prompts;
  options.agent.literal_pseudocode = literal;
  for (const auto& m : disable)
    if (!bench::disable_module(options.agent, m)) throw llm::ConfigError("unknown module '" + m + "'");
  auto backend = make_backend(backend_spec, tasks, gateway_config);

  bench::RunReport report = bench::run_suite(tasks, *backend, options);
  bench::write_run(report, out);
  std::cout << bench::report_table(report);
  for (const auto& t : report.tasks)
    if (t.status == "error" || t.status == "failed") std::cout << "task " << t.id << ": " << t.reason << "\n";
  bench::Cell overall = report.cell(std::nullopt, std::nullopt);
  std::cout << "overall SR: " << (overall.sr() ? bench::format_sr(overall) : std::string("n/a")) << " ("
            << overall.successes << "/" << overall.attempts << ")\n";
  return report.any_error() ? kTaskError : kOk;
}

int cmd_replay(const fs::path& trace_path) {
  agent::EpisodeTrace trace = agent::trace_from_jsonl(read_text(trace_path));
  env::EnvState initial = env::load_scenario_file(trace.scenario);
  if (!trace.pre_actions.empty())
    initial = env::apply_preactions(initial, dsl::parse_script(trace.pre_actions, dsl::ScriptMode::Preaction));
  agent::ReplayResult r = agent::replay_trace(trace, initial);
  for (const auto& m : r.mismatches) std::cout << "mismatch: " << m << "\n";
  std::cout << (r.ok ? "replay ok" : "replay FAILED") << ": " << r.actions_replayed << " action scripts\n";
  return r.ok ? kOk : kTaskError;
}

int cmd_augment(const fs::path& manifest, const std::string& task_id, const std::string& kind_name,
                const fs::path& pre_file) {
  bench::TaskKind kind;
  if (kind_name == "add") kind = bench::TaskKind::AddStep;
  else if (kind_name == "trim") kind = bench::TaskKind::TrimStep;
  else if (kind_name == "adjust") kind = bench::TaskKind::AdjustStep;
  else throw llm::ConfigError("--kind must be add, trim or adjust");
  const std::string pre = read_text(pre_file);

  std::vector<fs::path> files;
  nlohmann::json doc = nlohmann::json::parse(read_text(manifest));
  if (doc.contains("families"))
    for (const auto& f : doc.at("families")) files.push_back(manifest.parent_path() / f.get<std::string>());
  else
    files.push_back(manifest);
  for (const auto& file : files) {
    nlohmann::json family = nlohmann::json::parse(read_text(file));
    bool found = false;
    for (const auto& t : family.value("tasks", nlohmann::json::array()))
      if (t.value("id", "") == task_id) found = true;
    if (!found) continue;
    std::string id = bench::augment_family(family, task_id, kind, pre);
    bench::parse_family(family, file.parent_path());
    std::ofstream(file, std::ios::binary) << family.dump(2) << "\n";
    std::cout << "added " << id << " to " << file.string() << "\n";
    return kOk;
  }
  throw bench::ManifestError(task_id, "id", "not in the manifest");
}

int cmd_report(const fs::path& dir) {
  auto report = bench::report_from_json(nlohmann::json::parse(read_text(dir / "report.json")));
  std::cout << bench::report_table(report);
  return report.any_error() ? kTaskError : kOk;
}

int cmd_validate(const fs::path& manifest) {
  auto tasks = bench::load_tasks(manifest);
  std::size_t bad = 0;
  for (const auto& t : tasks) {
    auto issues = bench::validate_task(t);
    for (const auto& i : issues) std::cout << i.task_id << ": " << i.message << "\n";
    if (!issues.empty()) ++bad;
  }
  std::cout << tasks.size() - bad << "/" << tasks.size() << " tasks valid\n";
  return bad ? kTaskError : kOk;
}

int cmd_oracle(const fs::path& manifest, const fs::path& out) {
  auto tasks = bench::load_tasks(manifest);
  bench::write_fixtures(tasks, out);
  std::cout << "wrote fixtures for " << tasks.size() << " tasks to " << out.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale GUI agent benchmark"};
  app.require_subcommand(1);
  const std::string default_manifest = (fs::path(DESKAGENT_DATA_DIR) / "manifest.json").string();

  fs::path manifest = default_manifest, out = "run", trace, pre, in;
  std::string backend = "oracle", task, kind;
  std::size_t parallel = 1;
  std::vector<std::string> disable, only;
  bool persist = false, literal = false;
  std::optional<fs::path> prompts, gateway_config;

  auto* run = app.add_subcommand("run", "Run the suite and write report.json, timings.json and traces");
  run->add_option("--manifest", manifest, "Manifest, family file or directory");
  run->add_option("--backend", backend, "scripted:<file|dir>, http or oracle");
  run->add_option("--parallel", parallel, "Worker count")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "Output directory");
  run->add_option("--disable", disable, "Module to disable: planner_critic, step_check, actor_critic");
  run->add_option("--tasks", only, "Only these task ids")->delimiter(',');
  run->add_option("--prompts", prompts, "Prompt template directory");
  run->add_option("--gateway-config", gateway_config, "HTTP gateway JSON config");
  run->add_flag("--persist-prefs", persist, "Carry preferences across episodes of a family");
  run->add_flag("--literal-pseudocode", literal, "Enter the critic state after every actor execution");

  auto* replay = app.add_subcommand("replay", "Re-execute a trace's actions and check screenshot digests");
  replay->add_option("--trace", trace, "Trace .jsonl file")->required();

  auto* augment = app.add_subcommand("augment", "Add a pre-action variant of a meta task");
  augment->add_option("--manifest", manifest, "Manifest or family file");
  augment->add_option("--task", task, "Meta task id")->required();
  augment->add_option("--kind", kind, "add, trim or adjust")->required();
  augment->add_option("--pre", pre, "Pre-action script file")->required();

  auto* report = app.add_subcommand("report", "Print the SR table of a finished run");
  report->add_option("--in", in, "Run output directory")->required();

  auto* validate = app.add_subcommand("validate", "Replay every GT plan and check the evaluator");
  validate->add_option("--manifest", manifest, "Manifest, family file or directory");

  auto* oracle = app.add_subcommand("oracle", "Write scripted oracle and ablation fixtures");
  oracle->add_option("--manifest", manifest, "Manifest, family file or directory");
  oracle->add_option("--out", out, "Fixture directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(manifest, backend, parallel, out, disable, only, persist, literal, prompts, gateway_config);
    if (*replay) return cmd_replay(trace);
    if (*augment) return cmd_augment(manifest, task, kind, pre);
    if (*report) return cmd_report(in);
    if (*validate) return cmd_validate(manifest);
    if (*oracle) return cmd_oracle(manifest, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
