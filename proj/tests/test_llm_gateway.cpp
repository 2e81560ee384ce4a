#include <doctest.h>

#include "stub_server.hpp"
#include "support.hpp"

using namespace deskagent;
using namespace deskagent::llm;

namespace {

std::size_t image_parts(const ChatRequest& r) {
  std::size_t n = 0;
  for (const auto& m : r.messages)
    for (const auto& p : m.parts) n += std::holds_alternative<ImagePart>(p);
  return n;
}

std::string user_text(const ChatRequest& r) {
  std::string out;
  for (const auto& m : r.messages)
    if (m.speaker == Speaker::User)
      for (const auto& p : m.parts)
        if (const auto* t = std::get_if<TextPart>(&p)) out += t->text;
  return out;
}

env::RenderArtifact shot(const env::EnvState& s) { return env::observe(s).screenshot; }

ChatRequest actor_request(const std::string& subtask) {
  PromptContext ctx;
  ctx.fields = {{"subtask", subtask}, {"history", ""}, {"elements", "(elements)"}};
  ctx.images = {shot(testing::load("excel_merge"))};
  return render_prompt(PromptSet::defaults(), "actor", ctx);
}

}  // namespace

TEST_CASE("planner prompt carries both texts and one screenshot") {
  PromptContext ctx;
  ctx.fields = {{"query", "Merge the title"}, {"instruction_text", "drag across A1 to K1"}, {"elements", ""}};
  ctx.images = {shot(testing::load("excel_merge"))};
  ChatRequest r = render_prompt(PromptSet::defaults(), "planner", ctx);
  CHECK(r.role == RoleTag::Planner);
  CHECK(user_text(r).find("Merge the title") != std::string::npos);
  CHECK(user_text(r).find("drag across A1 to K1") != std::string::npos);
  CHECK(image_parts(r) == 1);
  CHECK(r.messages.front().speaker == Speaker::System);
}

TEST_CASE("step-check prompt carries only the cropped screenshot") {
  auto s = testing::load("excel_merge");
  auto obs = env::observe(s);
  auto cropped = gui::crop_observation(obs, gui::region_search_crop(s.screen, {372, 172, 80, 30}));
  PromptContext ctx;
  ctx.fields = {{"query", "q"}, {"plan", "p"}, {"subtask", "Click on Merge & Center"}, {"region", ""}, {"elements", ""}};
  ctx.images = {cropped.screenshot};
  ChatRequest r = render_prompt(PromptSet::defaults(), "step_check", ctx);
  REQUIRE(image_parts(r) == 1);
  const auto& img = std::get<ImagePart>(r.messages.back().parts.back()).artifact;
  CHECK(img.digest == cropped.screenshot.digest);
  CHECK(img.w == 960);
}

TEST_CASE("actor-critic prompt orders before then after") {
  auto s = testing::load("excel_merge");
  auto after = env::step(s, dsl::Click{240, 54});
  PromptContext ctx;
  ctx.fields = {{"subtask", "x"}, {"action", "click(240, 54)"}, {"changed", "yes"}};
  ctx.images = {shot(s), shot(after)};
  ChatRequest r = render_prompt(PromptSet::defaults(), "actor_critic", ctx);
  REQUIRE(image_parts(r) == 2);
  const auto& parts = r.messages.back().parts;
  CHECK(std::get<ImagePart>(parts[1]).artifact.digest == shot(s).digest);
  CHECK(std::get<ImagePart>(parts[2]).artifact.digest == shot(after).digest);
}

TEST_CASE("missing template fields") {
  PromptContext ctx;
  ctx.fields = {{"query", "q"}};
  ctx.images = {shot(testing::load("excel_merge"))};
  try {
    render_prompt(PromptSet::defaults(), "planner", ctx);
    FAIL("no error");
  } catch (const MissingContextField& e) {
    CHECK(e.field() == "instruction_text");
  }
  PromptContext no_image;
  no_image.fields = {{"query", "q"}, {"instruction_text", "t"}, {"elements", ""}};
  CHECK_THROWS_AS(render_prompt(PromptSet::defaults(), "planner", no_image), MissingContextField);
}

TEST_CASE("region chooser requests carry no screenshots") {
  CHECK_FALSE(consumes_screenshots(RoleTag::RegionChooser));
  PromptContext ctx;
  ctx.fields = {{"subtask", "s"}, {"elements", "e"}};
  ctx.images = {shot(testing::load("excel_merge"))};
  CHECK(image_parts(render_prompt(PromptSet::defaults(), "region_chooser", ctx)) == 0);
}

TEST_CASE("prompt directory overrides") {
  auto dir = testing::scratch("prompts");
  std::ofstream(dir / "region_chooser.user.txt") << "Pick for {{subtask}}";
  auto set = PromptSet::from_directory(dir);
  CHECK(set.get("region_chooser").user == "Pick for {{subtask}}");
  CHECK(set.get("planner").user == PromptSet::defaults().get("planner").user);
  CHECK_THROWS_AS(set.get("nope"), Error);
}

TEST_CASE("scripted backend: first match wins and consume_once advances") {
  std::vector<ScriptedRule> rules = {
      {RoleTag::Actor, {"Merge & Center"}, {}, "moveTo(0, 0)", true},
      {RoleTag::Actor, {"Merge & Center"}, {}, "click(412, 187)", false},
      {RoleTag::Planner, {}, {}, "plan", false},
  };
  ScriptedBackend b(rules);
  auto req = actor_request("Click on Merge & Center");
  CHECK(b.complete(req) == "moveTo(0, 0)");
  CHECK(b.complete(req) == "click(412, 187)");
  CHECK(b.complete(req) == "click(412, 187)");
  CHECK(b.calls() == 3);

  ScriptedBackend again(rules);
  for (const char* expected : {"moveTo(0, 0)", "click(412, 187)"}) CHECK(again.complete(req) == expected);
}

TEST_CASE("scripted backend: no match names the role") {
  ScriptedBackend b({{RoleTag::Planner, {}, {}, "plan", false}});
  try {
    b.complete(actor_request("anything"));
    FAIL("no error");
  } catch (const NoScriptedMatch& e) {
    CHECK(e.role() == RoleTag::Actor);
    CHECK(std::string(e.what()).find("actor") != std::string::npos);
  }
}

TEST_CASE("scripted backend: excludes") {
  ScriptedBackend b({{RoleTag::Actor, {"Current subtask"}, {"Current subtask: Click on Merge"}, "a", false},
                     {RoleTag::Actor, {}, {}, "b", false}});
  CHECK(b.complete(actor_request("Click on Merge & Center")) == "b");
  CHECK(b.complete(actor_request("Click on Bold")) == "a");
}

TEST_CASE("rules json round trip and provider") {
  std::vector<ScriptedRule> rules = {{RoleTag::Actor, {"x"}, {"zzz"}, "click(1, 2)", true},
                                     {std::nullopt, {}, {}, "anything", false}};
  auto back = rules_from_json(rules_to_json(rules));
  REQUIRE(back.size() == 2);
  CHECK(back[0].role == RoleTag::Actor);
  CHECK(back[0].excludes == std::vector<std::string>{"zzz"});
  CHECK(back[0].consume_once);
  CHECK_FALSE(back[1].role.has_value());

  auto dir = testing::scratch("rules");
  std::ofstream(dir / "t1.json") << rules_to_json(rules).dump();
  ScriptedProvider provider(dir);
  CHECK(provider.open_episode("t1")->complete(actor_request("x")) == "click(1, 2)");
  CHECK_THROWS(provider.open_episode("missing"));
}

TEST_CASE("chat body shape") {
  HttpConfig cfg;
  cfg.model = "test-model";
  auto body = build_chat_body(actor_request("s"), cfg);
  CHECK(validate_chat_body(body).empty());
  CHECK(body["messages"][1]["content"][1]["type"] == "image_url");
  CHECK(body["messages"][1]["content"][1]["image_url"]["url"].get<std::string>().rfind("data:image/bmp;base64,", 0) == 0);

  auto no_model = body;
  no_model["model"] = "";
  CHECK_FALSE(validate_chat_body(no_model).empty());
  auto extra = body;
  extra["stream"] = true;
  CHECK_FALSE(validate_chat_body(extra).empty());
  auto sys_image = body;
  sys_image["messages"][0]["content"].push_back(body["messages"][1]["content"][1]);
  CHECK_FALSE(validate_chat_body(sys_image).empty());
  CHECK_FALSE(validate_chat_body(nlohmann::json::array()).empty());
  CHECK(base64_encode("Man") == "TWFu");
  CHECK(base64_encode("Ma") == "TWE=");
  CHECK(rasterize_placeholder(shot(testing::load("excel_merge"))).substr(0, 2) == "BM");
}

TEST_CASE("http backend round trip against a stub server") {
  std::vector<ScriptedRule> rules = {{RoleTag::Actor, {"Merge & Center"}, {}, "click(412, 187)", false}};
  testing::StubServer server(std::make_unique<ScriptedBackend>(rules));
  HttpConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.model = "stub-model";
  cfg.api_key = "secret";
  HttpBackend http(cfg);
  CHECK(http.complete(actor_request("Click on Merge & Center")) == "click(412, 187)");
  auto cap = server.captured();
  REQUIRE(cap.size() == 1);
  CHECK(validate_chat_body(cap[0].body).empty());
  CHECK(cap[0].body["model"] == "stub-model");
  CHECK(cap[0].role == RoleTag::Actor);
  CHECK(cap[0].images == 1);
}

TEST_CASE("http errors") {
  testing::StubServer server(std::make_unique<ScriptedBackend>(std::vector<ScriptedRule>{}), 500);
  HttpConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.model = "m";
  HttpBackend http(cfg);
  try {
    http.complete(actor_request("s"));
    FAIL("no error");
  } catch (const HttpError& e) {
    CHECK(e.status() == 500);
    CHECK(e.body().find("stub failure") != std::string::npos);
  }

  HttpConfig dead;
  dead.endpoint = "http://127.0.0.1:1/v1";
  dead.model = "m";
  dead.timeout = std::chrono::milliseconds(500);
  CHECK_THROWS_AS(HttpBackend(dead).complete(actor_request("s")), Error);
}

TEST_CASE("gateway config file and environment") {
  auto dir = testing::scratch("gateway");
  std::ofstream(dir / "gw.json") << R"({"endpoint": "http://localhost:9/v1", "model": "m1", "max_tokens": 64})";
  HttpConfig c = load_http_config(dir / "gw.json");
  CHECK(c.endpoint == "http://localhost:9/v1");
  CHECK(c.model == "m1");
  CHECK(c.max_tokens == 64);
  CHECK_THROWS_AS(load_http_config(dir / "absent.json"), ConfigError);
}
