#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "deskagent/bench_harness.hpp"

namespace deskagent::bench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json cell_json(const Cell& c) {
  auto sr = c.sr();
  return {{"successes", c.successes}, {"attempts", c.attempts}, {"sr", sr ? json(format_sr(c)) : json()}};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << text;
}

}  // namespace

std::string format_sr(const Cell& cell) {
  auto sr = cell.sr();
  if (!sr) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *sr);
  return buf;
}

std::string report_table(const RunReport& report) {
  std::ostringstream out;
  auto row = [&](std::string_view name, std::optional<Category> c) {
    out << std::left << std::setw(10) << name << std::right << std::setw(8) << format_sr(report.cell(c, false))
        << std::setw(8) << format_sr(report.cell(c, true)) << std::setw(9) << format_sr(report.cell(c, std::nullopt))
        << "\n";
  };
  out << std::left << std::setw(10) << "Category" << std::right << std::setw(8) << "Meta" << std::setw(8) << "Aug."
      << std::setw(9) << "Overall" << "\n";
  for (Category c : kCategories) row(to_string(c), c);
  row("Overall", std::nullopt);
  return out.str();
}

json report_to_json(const RunReport& report) {
  json tasks = json::array();
  for (const auto& t : report.tasks)
    tasks.push_back({{"id", t.id},
                     {"category", std::string(to_string(t.category))},
                     {"kind", std::string(to_string(t.kind))},
                     {"reward", t.reward},
                     {"steps", t.steps},
                     {"status", t.status},
                     {"reason", t.reason}});
  json grid = json::object();
  for (Category c : kCategories)
    grid[std::string(to_string(c))] = {{"meta", cell_json(report.cell(c, false))},
                                       {"aug", cell_json(report.cell(c, true))},
                                       {"overall", cell_json(report.cell(c, std::nullopt))}};
  grid["Overall"] = {{"meta", cell_json(report.cell(std::nullopt, false))},
                     {"aug", cell_json(report.cell(std::nullopt, true))},
                     {"overall", cell_json(report.cell(std::nullopt, std::nullopt))}};
  Cell overall = report.cell(std::nullopt, std::nullopt);
  return {{"version", 1},
          {"tasks", std::move(tasks)},
          {"sr", std::move(grid)},
          {"overall_sr", overall.sr() ? format_sr(overall) : "n/a"}};
}

json timings_to_json(const RunReport& report) {
  json tasks = json::array();
  double total = 0.0;
  for (const auto& t : report.tasks) {
    tasks.push_back({{"id", t.id}, {"wall_ms", t.wall_ms}});
    total += t.wall_ms;
  }
  return {{"tasks", std::move(tasks)}, {"total_ms", total}};
}

RunReport report_from_json(const json& j) {
  RunReport report;
  try {
    for (const auto& t : j.at("tasks")) {
      TaskResult r;
      r.id = t.at("id").get<std::string>();
      auto c = category_from_string(t.at("category").get<std::string>());
      auto k = kind_from_string(t.at("kind").get<std::string>());
      if (!c || !k) throw Error("ReportFormatError", "task " + r.id + ": unknown category or kind");
      r.category = *c;
      r.kind = *k;
      r.reward = t.at("reward").get<int>();
      r.steps = t.at("steps").get<std::size_t>();
      r.status = t.at("status").get<std::string>();
      r.reason = t.value("reason", "");
      report.tasks.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error("ReportFormatError", e.what());
  }
  return report;
}

void write_run(const RunReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir / "traces");
  write_file(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_file(out_dir / "timings.json", timings_to_json(report).dump(2) + "\n");
  write_file(out_dir / "report.txt", report_table(report));
  for (const auto& t : report.tasks) write_file(out_dir / "traces" / (t.id + ".jsonl"), agent::trace_to_jsonl(t.trace));
}

}  // namespace deskagent::bench
