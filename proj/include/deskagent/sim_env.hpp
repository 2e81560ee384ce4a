#pragma once

// Deterministic simulated desktop. A scenario document describes a widget
// tree, transition rules, a small virtual filesystem and a set of goal flags;
// `step` is the transition function and `observe` the observation emitter.
//
// Hit-testing order: depth-first paint order, later siblings on top of
// earlier ones and children on top of their parent. While a dialog is
// visible only the topmost dialog's subtree can be hit. While a popup menu
// is open, a press outside the popup closes every open popup and is
// swallowed.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "deskagent/action_dsl.hpp"
#include "deskagent/error.hpp"

namespace deskagent::env {

using dsl::Point;
using dsl::ScreenSize;

enum class Role { Window, Tab, Button, Menu, MenuItem, Textbox, Checkbox, Slider, Cell, Pane, Dialog };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view name);

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(Point p) const { return p.x >= x && p.y >= y && p.x < x + w && p.y < y + h; }
  bool intersects(const Rect& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
  /// Floor of the midpoint.
  Point center() const { return {x + w / 2, y + h / 2}; }
  bool operator==(const Rect&) const = default;
};

/// null | string | number
using Value = std::variant<std::monostate, std::string, double>;

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);
std::string value_to_text(const Value& v);

struct Widget {
  std::string id;
  Role role = Role::Pane;
  std::string label;
  Rect bbox;
  bool visible = true;
  bool enabled = true;
  bool selected = false;
  Value value;
  std::map<std::string, std::string> attrs;
  bool popup = false;  // menus only: dismissed by a press outside
  double min = 0.0;    // sliders only
  double max = 100.0;
  std::vector<Widget> children;
};

const Widget* find_widget(const Widget& root, std::string_view id);
Widget* find_widget(Widget& root, std::string_view id);

/// visible | enabled | selected | value | attr:<name>; null for unknown fields
/// and missing attributes.
nlohmann::json widget_field(const Widget& w, std::string_view field);

enum class TriggerKind { Click, Write, Press, Hotkey, Scroll, Drag };

struct Trigger {
  TriggerKind kind = TriggerKind::Click;
  std::string widget;  // click/scroll/write target, drag source
  std::string to;      // drag destination
  dsl::MouseButton button = dsl::MouseButton::Left;
  int clicks = 1;
  std::vector<std::string> keys;  // press: one key; hotkey: the chord
  int direction = 0;              // scroll: -1 down, +1 up, 0 either
  std::string focus;              // press/hotkey: only while this widget has focus
};

/// Predicate over one widget field. `field` is visible, enabled, selected,
/// value, or attr:<name>.
struct Guard {
  enum class Op { Eq, Ne };
  std::string widget;
  std::string field;
  Op op = Op::Eq;
  nlohmann::json expected;
};

struct FsOp {
  enum class Kind { Create, Mkdir, Delete, Move };
  Kind kind = Kind::Create;
  std::string path;
  std::string to;
  std::int64_t size = 0;
};

struct Effect {
  enum class Kind {
    SetVisible,
    ToggleVisible,
    SetSelected,
    ToggleSelected,
    SetValue,
    SetAttr,
    Focus,
    OpenDialog,
    CloseDialog,
    Fs,
    MarkGoalFlag,
    ClearGoalFlag,
    SetPref,
  };
  Kind kind = Kind::SetVisible;
  std::string target;  // widget id, goal flag or pref key
  std::string attr;
  nlohmann::json value;
  FsOp fs;
};

struct TransitionRule {
  Trigger trigger;
  std::vector<Guard> when;
  std::vector<Effect> effects;
};

struct PrefBinding {
  std::string key;
  nlohmann::json equals;
  std::vector<Effect> effects;
};

struct FileEntry {
  bool is_dir = false;
  std::int64_t size = 0;
  bool operator==(const FileEntry&) const = default;
};

using FileSystem = std::map<std::string, FileEntry>;
using Prefs = std::map<std::string, nlohmann::json>;

/// Immutable part of a loaded scenario, shared by every state derived from it.
struct Scenario {
  std::string name;
  ScreenSize screen;
  std::vector<TransitionRule> rules;
  std::set<std::string> declared_flags;
  std::vector<PrefBinding> pref_bindings;
};

/// Transient input-device state. Not part of the state digest.
struct InputState {
  Point pointer;
  bool pressed = false;
  bool press_swallowed = false;
  dsl::MouseButton pressed_button = dsl::MouseButton::Left;
  Point press_point;
  std::vector<std::string> held_keys;
};

struct EnvState {
  ScreenSize screen;
  Widget root;  // synthetic container; its children are the scenario's top-level widgets
  std::optional<std::string> focus;
  FileSystem fs;
  Prefs prefs;
  std::set<std::string> goal_flags;
  InputState input;
  std::shared_ptr<const Scenario> scenario;
};

/// Stable 64-bit digest of everything except the transient input state.
std::uint64_t state_digest(const EnvState& state);
nlohmann::json state_to_json(const EnvState& state);

std::string digest_hex(std::uint64_t digest);
std::uint64_t fnv1a64(std::string_view bytes);

struct ElementRender {
  Role role = Role::Pane;
  std::string label;
  Rect bbox;
  bool selected = false;
  bool enabled = true;
  bool focused = false;
  Value value;
  std::map<std::string, std::string> attrs;
};

/// Structured stand-in for a screenshot: what is painted, in paint order.
struct RenderArtifact {
  int w = 0;
  int h = 0;
  std::vector<ElementRender> elements;
  std::uint64_t digest = 0;
};

struct MetaElement {
  std::string id;
  Role role = Role::Pane;
  std::string label;
  Rect bbox;
  bool selected = false;
  Value value;
};

struct Observation {
  RenderArtifact screenshot;
  std::vector<MetaElement> metadata;
};

std::uint64_t render_digest(const RenderArtifact& artifact);

class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error("SchemaError", path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class DanglingWidgetRef : public Error {
 public:
  DanglingWidgetRef(std::string path, std::string widget)
      : Error("DanglingWidgetRef", path + ": unknown widget '" + widget + "'"),
        path_(std::move(path)),
        widget_(std::move(widget)) {}
  const std::string& path() const noexcept { return path_; }
  const std::string& widget() const noexcept { return widget_; }

 private:
  std::string path_;
  std::string widget_;
};

class PreactionOutOfBounds : public Error {
 public:
  PreactionOutOfBounds(std::size_t index, Point p)
      : Error("PreactionOutOfBounds", "pre-action " + std::to_string(index) + " targets (" +
                                          std::to_string(p.x) + ", " + std::to_string(p.y) +
                                          ") outside the screen"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Builds the default initial state. `carried` overrides the document's
/// default preferences (used when preferences persist across episodes).
EnvState load_scenario(const nlohmann::json& doc, const Prefs* carried = nullptr);
EnvState load_scenario_file(const std::filesystem::path& path, const Prefs* carried = nullptr);

EnvState step(const EnvState& state, const dsl::Action& action);
Observation observe(const EnvState& state);
EnvState apply_preactions(const EnvState& state, const dsl::ActionScript& pre);

/// Applies rule effects in order, then drops focus that is no longer valid.
void apply_effects(EnvState& state, const std::vector<Effect>& effects);
/// Applies the effects of every preference binding whose key currently matches.
void apply_pref_bindings(EnvState& state);

/// Runs a script statement by statement; no bounds validation.
EnvState run_script(const EnvState& state, const dsl::ActionScript& script);

/// Topmost visible, enabled widget under `p`, honouring dialog occlusion.
std::optional<std::string> hit_test(const EnvState& state, Point p);

/// True when `id` and all its ancestors are visible.
bool is_effectively_visible(const EnvState& state, std::string_view id);

struct FsPredicate {
  enum class Kind { Exists, Absent, InDir };
  Kind kind = Kind::Exists;
  std::string path;
  std::string dir;  // InDir only
};

bool fs_status(const EnvState& state, const FsPredicate& predicate);
std::string parent_dir(std::string_view path);

}  // namespace deskagent::env
