#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace deskagent;
using namespace deskagent::gui;

namespace {

Rect box_at(int cx, int cy) { return {cx - 1, cy - 1, 2, 2}; }

std::vector<GuiElement> excel_elements() { return parse_elements(env::observe(testing::load("excel_merge"))); }

}  // namespace

TEST_CASE("parse_elements computes floor centres in document order") {
  auto els = excel_elements();
  auto obs = env::observe(testing::load("excel_merge"));
  REQUIRE(els.size() == obs.metadata.size());
  for (std::size_t i = 0; i < els.size(); ++i) CHECK(els[i].id == obs.metadata[i].id);

  bool merge = false;
  for (const auto& e : els)
    if (e.label == "Merge & Center") {
      merge = true;
      CHECK(e.role == Role::Button);
      CHECK(e.bbox.contains(e.center));
    }
  CHECK(merge);

  env::Observation one;
  one.metadata.push_back({"x", Role::Button, "X", Rect{10, 10, 5, 4}, false, {}});
  auto single = parse_elements(one);
  REQUIRE(single.size() == 1);
  CHECK(single[0].center == Point{12, 12});
  CHECK(parse_elements(env::Observation{}).empty());
}

TEST_CASE("locate_element ranking") {
  auto els = excel_elements();
  auto exact = locate_element("Merge & Center", els);
  CHECK(exact.front().element.id == "btn_merge");
  CHECK(exact.front().score == doctest::Approx(1.0));

  auto normalized = locate_element("merge and center", els);
  CHECK(normalized.front().element.id == "btn_merge");
  CHECK(normalized.front().score < 1.0);

  CHECK_THROWS_AS(locate_element("Quantum Flux", els), NoMatch);
  CHECK_THROWS_AS(locate_element("Bold", {}), NoMatch);

  CHECK(locate_element("merge", els).front().element.id == "btn_merge");
  CHECK(normalize_label("Merge & Center!") == "merge and center");
  CHECK(label_similarity("Bold", "Bold") == doctest::Approx(1.0));
  CHECK(label_similarity("bold", "Bold") == doctest::Approx(0.95));
}

TEST_CASE("locate_element breaks ties by document order and is stable") {
  std::vector<GuiElement> els = {
      {"a", "Copy", Role::MenuItem, {0, 0, 10, 10}, {5, 5}},
      {"b", "Copy", Role::Button, {20, 0, 10, 10}, {25, 5}},
  };
  auto m = locate_element("Copy", els);
  REQUIRE(m.size() == 2);
  CHECK(m[0].element.id == "a");
  CHECK(m[1].element.id == "b");
  for (int i = 0; i < 5; ++i) CHECK(locate_element("Copy", els)[0].index == 0);

  LocateOptions strict;
  strict.threshold = 0.99;
  CHECK_THROWS_AS(locate_element("copy", els, strict), NoMatch);
}

TEST_CASE("region search clamp examples") {
  const ScreenSize s{1920, 1080};
  CHECK(region_search_crop(s, box_at(960, 540)) == CropRegion{480, 270, 1440, 810});
  CHECK(region_search_crop(s, box_at(100, 100)) == CropRegion{0, 0, 960, 540});
  CHECK(region_search_crop(s, box_at(1900, 1060)) == CropRegion{960, 540, 1920, 1080});
  CHECK_THROWS_AS(region_search_crop(s, Rect{5000, 5000, 10, 10}), AnchorOutOfScreen);
}

TEST_CASE("region search property over random anchors") {
  std::mt19937_64 rng(99);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int i = 0; i < 1000; ++i) {
    const ScreenSize s{uni(1, 4000), uni(1, 3000)};
    const Rect a{uni(0, s.w - 1), uni(0, s.h - 1), uni(1, 300), uni(1, 300)};
    const CropRegion r = region_search_crop(s, a);
    CHECK(r.width() <= (s.w + 1) / 2);
    CHECK(r.height() <= (s.h + 1) / 2);
    CHECK(r.x0 >= 0);
    CHECK(r.y0 >= 0);
    CHECK(r.x1 <= s.w);
    CHECK(r.y1 <= s.h);
    const Point c = a.center();
    if (c.x < s.w && c.y < s.h) {
      CHECK(c.x >= r.x0);
      CHECK(c.x < r.x1);
      CHECK(c.y >= r.y0);
      CHECK(c.y < r.y1);
    }
  }
}

TEST_CASE("crop_observation") {
  auto obs = env::observe(testing::load("excel_merge"));
  auto full = crop_observation(obs, {0, 0, 1920, 1080});
  REQUIRE(full.metadata.size() == obs.metadata.size());
  for (std::size_t i = 0; i < obs.metadata.size(); ++i) CHECK(full.metadata[i].bbox == obs.metadata[i].bbox);

  env::Observation corner;
  corner.screenshot.w = 1920;
  corner.screenshot.h = 1080;
  corner.metadata.push_back({"x", Role::Button, "X", Rect{0, 0, 10, 10}, false, {}});
  CHECK(crop_observation(corner, {100, 100, 200, 200}).metadata.empty());
  auto empty = crop_observation(env::Observation{}, {0, 0, 10, 10});
  CHECK(empty.metadata.empty());

  const Rect merge{372, 172, 80, 30};
  const CropRegion r = region_search_crop({1920, 1080}, merge);
  auto cropped = crop_observation(obs, r);
  bool has_merge = false, has_status = false;
  for (const auto& m : cropped.metadata) {
    if (m.id == "btn_merge") {
      has_merge = true;
      CHECK(Rect{m.bbox.x + r.x0, m.bbox.y + r.y0, m.bbox.w, m.bbox.h} == merge);
    }
    if (m.id == "status_bar") has_status = true;
  }
  CHECK(has_merge);
  CHECK_FALSE(has_status);
  CHECK(cropped.screenshot.w == r.width());
  CHECK(cropped.screenshot.digest != obs.screenshot.digest);
}
