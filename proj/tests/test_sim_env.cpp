#include <doctest.h>

#include "support.hpp"

using namespace deskagent;
using namespace deskagent::env;
using nlohmann::json;

namespace {

EnvState click_at(const EnvState& s, Point p) { return step(s, dsl::Click{p.x, p.y}); }

bool in_metadata(const Observation& obs, const std::string& id) {
  for (const auto& m : obs.metadata)
    if (m.id == id) return true;
  return false;
}

json tiny_doc() {
  return json::parse(R"({
    "name": "tiny",
    "screen": {"w": 200, "h": 100},
    "widgets": [
      {"id": "win", "role": "window", "label": "Tiny", "bbox": [0, 0, 200, 100], "children": [
        {"id": "save", "role": "button", "label": "Save", "bbox": [10, 10, 40, 20]}
      ]}
    ],
    "rules": [
      {"trigger": {"kind": "click", "widget": "save"},
       "effects": [{"op": "fs-op", "kind": "create", "path": "/out/report.pdf", "size": 10}]}
    ]
  })");
}

}  // namespace

TEST_CASE("excel default state") {
  EnvState s = testing::load("excel_merge");
  CHECK(s.screen == ScreenSize{1920, 1080});
  CHECK(find_widget(s.root, "tab_home")->selected);
  CHECK(is_effectively_visible(s, "btn_merge"));
  Observation obs = observe(s);
  bool found = false;
  for (const auto& m : obs.metadata)
    if (m.label == "Merge & Center") {
      found = true;
      CHECK(m.bbox == Rect{372, 172, 80, 30});
    }
  CHECK(found);
}

TEST_CASE("loading is deterministic") {
  EnvState a = testing::load("excel_merge");
  EnvState b = testing::load("excel_merge");
  CHECK(state_digest(a) == state_digest(b));
  CHECK(observe(a).screenshot.digest == observe(b).screenshot.digest);
}

TEST_CASE("scenario schema errors") {
  json doc = tiny_doc();
  doc["rules"][0]["trigger"]["widget"] = "ghost";
  CHECK_THROWS_AS(load_scenario(doc), DanglingWidgetRef);

  json no_screen = tiny_doc();
  no_screen.erase("screen");
  CHECK_THROWS_AS(load_scenario(no_screen), SchemaError);

  json bad_role = tiny_doc();
  bad_role["widgets"][0]["role"] = "spaceship";
  try {
    load_scenario(bad_role);
    FAIL("no error");
  } catch (const SchemaError& e) {
    CHECK(e.path().find("role") != std::string::npos);
  }

  json dup = tiny_doc();
  dup["widgets"][0]["children"].push_back(dup["widgets"][0]["children"][0]);
  CHECK_THROWS_AS(load_scenario(dup), SchemaError);
}

TEST_CASE("tab switch hides the home ribbon") {
  EnvState s = testing::load("excel_merge");
  EnvState t = click_at(s, testing::center_of(s, "tab_data"));
  CHECK(find_widget(t.root, "tab_data")->selected);
  CHECK_FALSE(is_effectively_visible(t, "btn_merge"));
  CHECK(is_effectively_visible(t, "btn_sort"));
  CHECK_FALSE(in_metadata(observe(t), "btn_merge"));
}

TEST_CASE("a miss is a no-op") {
  EnvState s = testing::load("excel_merge");
  EnvState t = click_at(s, {1500, 600});
  CHECK(state_digest(t) == state_digest(s));
  CHECK(observe(t).screenshot.digest == observe(s).screenshot.digest);
  EnvState m = step(s, dsl::MoveTo{5, 5});
  CHECK(state_digest(m) == state_digest(s));
}

TEST_CASE("dropdown toggles closed on a second click") {
  EnvState s = testing::load("ppt_text_style");
  const Point trigger = testing::center_of(s, "pbtn_color");
  EnvState open = click_at(s, trigger);
  CHECK(is_effectively_visible(open, "color_menu"));
  EnvState closed = click_at(open, trigger);
  CHECK_FALSE(is_effectively_visible(closed, "color_menu"));
  CHECK(state_digest(closed) == state_digest(s));
}

TEST_CASE("escape closes an open popup") {
  EnvState s = testing::load("ppt_text_style");
  EnvState open = click_at(s, testing::center_of(s, "pbtn_color"));
  EnvState closed = step(open, dsl::Press{"esc"});
  CHECK_FALSE(is_effectively_visible(closed, "color_menu"));
}

TEST_CASE("dialogs occlude everything beneath them") {
  EnvState s = testing::load("settings_panel");
  EnvState d = step(s, dsl::Hotkey{{"win", "u"}});
  REQUIRE(is_effectively_visible(d, "update_dialog"));
  Observation obs = observe(d);
  CHECK(in_metadata(obs, "btn_remind"));
  CHECK_FALSE(in_metadata(obs, "nav_personal"));

  // Every hit while the dialog is up resolves inside it.
  const Widget* dialog = find_widget(d.root, "update_dialog");
  for (int x = 0; x < 1920; x += 97)
    for (int y = 0; y < 1080; y += 53)
      if (auto hit = hit_test(d, {x, y})) CHECK(find_widget(*dialog, *hit) != nullptr);

  EnvState blocked = click_at(d, testing::center_of(d, "nav_personal"));
  CHECK(state_digest(blocked) == state_digest(d));
  EnvState dismissed = click_at(d, testing::center_of(d, "btn_remind"));
  CHECK_FALSE(is_effectively_visible(dismissed, "update_dialog"));
}

TEST_CASE("slider drag sets a proportional value") {
  EnvState s = testing::load("web_form");
  const Rect bar = find_widget(s.root, "level")->bbox;
  EnvState t = step(step(s, dsl::MoveTo{bar.x + 5, bar.y + 15}), dsl::DragTo{bar.x + bar.w / 2, bar.y + 15, 0.5});
  CHECK(widget_field(*find_widget(t.root, "level"), "value") == json(5.0));
  EnvState far = step(step(s, dsl::MoveTo{bar.x + 5, bar.y + 15}), dsl::DragTo{1900, bar.y + 15, 0.5});
  CHECK(widget_field(*find_widget(far.root, "level"), "value") == json(10.0));
}

TEST_CASE("writing goes to the focused textbox") {
  EnvState s = testing::load("web_form");
  EnvState unfocused = step(s, dsl::Write{"Ada"});
  CHECK(state_digest(unfocused) == state_digest(s));
  EnvState f = click_at(s, testing::center_of(s, "name_box"));
  REQUIRE(f.focus == std::optional<std::string>("name_box"));
  EnvState w = step(f, dsl::Write{"Ada"});
  CHECK(value_to_text(find_widget(w.root, "name_box")->value) == "Ada");
  EnvState b = step(w, dsl::Press{"backspace"});
  CHECK(value_to_text(find_widget(b.root, "name_box")->value) == "Ad");
}

TEST_CASE("mouseDown and mouseUp at one point act as a click") {
  EnvState s = testing::load("excel_merge");
  const Point p = testing::center_of(s, "tab_data");
  EnvState a = click_at(s, p);
  EnvState b = step(step(step(s, dsl::MoveTo{p.x, p.y}), dsl::MouseDown{}), dsl::MouseUp{});
  CHECK(state_digest(a) == state_digest(b));
}

TEST_CASE("held keys form a chord") {
  EnvState s = testing::load("settings_panel");
  EnvState t = step(step(s, dsl::KeyDown{"win"}), dsl::Press{"u"});
  CHECK(is_effectively_visible(t, "update_dialog"));
}

TEST_CASE("preactions") {
  EnvState s = testing::load("excel_merge");
  EnvState same = apply_preactions(s, dsl::parse_script("", dsl::ScriptMode::Preaction));
  CHECK(state_digest(same) == state_digest(s));

  EnvState data = apply_preactions(s, dsl::parse_script("from pyautogui import click\nclick(240, 54)", dsl::ScriptMode::Preaction));
  CHECK(find_widget(data.root, "tab_data")->selected);

  EnvState wrong = apply_preactions(
      s, dsl::parse_script("moveTo(100, 296)\ndragTo(1100, 296, 0.5)", dsl::ScriptMode::Preaction));
  CHECK(widget_field(*find_widget(wrong.root, "sheet"), "attr:selection") == json("A2:K2"));

  CHECK_THROWS_AS(apply_preactions(s, dsl::parse_script("click(5000, 5)")), PreactionOutOfBounds);
}

TEST_CASE("filesystem predicates") {
  EnvState tiny = load_scenario(tiny_doc());
  CHECK_FALSE(fs_status(tiny, {FsPredicate::Kind::Exists, "/out/report.pdf", ""}));
  CHECK(fs_status(tiny, {FsPredicate::Kind::Absent, "/out/report.pdf", ""}));
  EnvState made = click_at(tiny, {30, 20});
  CHECK(fs_status(made, {FsPredicate::Kind::Exists, "/out/report.pdf", ""}));
  CHECK(fs_status(made, {FsPredicate::Kind::InDir, "/out/report.pdf", "/out"}));

  // Replay the move through the explorer UI and check the result.
  const auto& task = testing::task("file_explorer");
  EnvState done = bench::replay_gt(task);
  CHECK(fs_status(done, {FsPredicate::Kind::InDir, "/archive/project.mp4", "/archive"}));
  CHECK(fs_status(done, {FsPredicate::Kind::Absent, "/home/user/Videos/project.mp4", ""}));
  CHECK(parent_dir("/archive/a.mp4") == "/archive");
}

TEST_CASE("preferences persist through carried prefs") {
  EnvState s = testing::load("settings_panel");
  CHECK(find_widget(s.root, "nav_system")->selected);
  EnvState moved = click_at(s, testing::center_of(s, "nav_personal"));
  CHECK(moved.prefs.at("last_page") == json("personal"));
  EnvState next = load_scenario_file(testing::scenario_path("settings_panel"), &moved.prefs);
  CHECK(find_widget(next.root, "nav_personal")->selected);
  CHECK(is_effectively_visible(next, "page_personal"));
}

TEST_CASE("digest ignores field order and input state") {
  json doc = tiny_doc();
  json reordered = json::object();
  for (auto it = doc.rbegin(); it != doc.rend(); ++it) reordered[it.key()] = it.value();
  CHECK(state_digest(load_scenario(doc)) == state_digest(load_scenario(reordered)));
  EnvState s = load_scenario(doc);
  EnvState moved = step(s, dsl::MoveTo{150, 90});
  CHECK(state_digest(moved) == state_digest(s));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(digest_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("every bundled scenario's meta plan reaches its goal") {
  for (const auto& t : testing::suite()) {
    INFO(t.id);
    CHECK(bench::evaluate(bench::replay_gt(t), t.eval) == 1);
  }
}

TEST_CASE("metadata lists exactly the visible enabled widgets") {
  for (const char* name : {"excel_merge", "ppt_text_style", "settings_panel", "file_explorer", "web_form"}) {
    EnvState s = testing::load(name);
    for (const auto& m : observe(s).metadata) {
      const Widget* w = find_widget(s.root, m.id);
      REQUIRE(w);
      CHECK(w->enabled);
      CHECK(is_effectively_visible(s, m.id));
      CHECK(m.bbox.x >= 0);
      CHECK(m.bbox.x + m.bbox.w <= s.screen.w);
    }
  }
}
