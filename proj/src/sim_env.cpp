#include "deskagent/sim_env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace deskagent::env {

using nlohmann::json;

namespace {

constexpr std::pair<Role, std::string_view> kRoleNames[] = {
    {Role::Window, "window"},     {Role::Tab, "tab"},         {Role::Button, "button"},
    {Role::Menu, "menu"},         {Role::MenuItem, "menuitem"}, {Role::Textbox, "textbox"},
    {Role::Checkbox, "checkbox"}, {Role::Slider, "slider"},   {Role::Cell, "cell"},
    {Role::Pane, "pane"},         {Role::Dialog, "dialog"},
};

// Widgets in paint order together with the top-level dialog that owns them
// (null outside dialogs). Only effectively visible widgets are listed.
struct Painted {
  const Widget* widget;
  const Widget* dialog;
};

struct PaintList {
  std::vector<Painted> items;
  std::vector<const Widget*> dialogs;  // visible top-level dialogs, bottom to top
};

void paint_subtree(const Widget& w, const Widget* dialog, PaintList& out,
                   std::vector<const Widget*>& deferred) {
  if (!w.visible) return;
  if (w.role == Role::Dialog && dialog == nullptr) {
    deferred.push_back(&w);
    return;
  }
  out.items.push_back({&w, dialog});
  for (const auto& c : w.children) paint_subtree(c, dialog, out, deferred);
}

PaintList paint_order(const Widget& root) {
  PaintList out;
  std::vector<const Widget*> deferred;
  for (const auto& c : root.children) paint_subtree(c, nullptr, out, deferred);
  // Dialogs paint above everything else, in document order among themselves.
  for (std::size_t i = 0; i < deferred.size(); ++i) {
    const Widget* d = deferred[i];
    out.dialogs.push_back(d);
    out.items.push_back({d, d});
    std::vector<const Widget*> nested;
    for (const auto& c : d->children) paint_subtree(c, d, out, nested);
  }
  return out;
}

bool collect_path(const Widget& w, std::string_view id, std::vector<const Widget*>& path) {
  path.push_back(&w);
  if (w.id == id) return true;
  for (const auto& c : w.children)
    if (collect_path(c, id, path)) return true;
  path.pop_back();
  return false;
}

// Ids from `id` up to its top-level ancestor.
std::vector<std::string> ancestry(const Widget& root, std::string_view id) {
  std::vector<const Widget*> path;
  std::vector<std::string> out;
  if (!collect_path(root, id, path)) return out;
  for (auto it = path.rbegin(); it != path.rend(); ++it)
    if (*it != &root) out.push_back((*it)->id);
  return out;
}

bool subtree_contains(const Widget& w, std::string_view id) { return find_widget(w, id) != nullptr; }

json widget_to_json(const Widget& w) {
  json j;
  j["id"] = w.id;
  j["role"] = std::string(to_string(w.role));
  j["label"] = w.label;
  j["bbox"] = {w.bbox.x, w.bbox.y, w.bbox.w, w.bbox.h};
  j["visible"] = w.visible;
  j["enabled"] = w.enabled;
  j["selected"] = w.selected;
  j["value"] = value_to_json(w.value);
  j["attrs"] = w.attrs;
  if (w.popup) j["popup"] = true;
  if (w.role == Role::Slider) {
    j["min"] = w.min;
    j["max"] = w.max;
  }
  json children = json::array();
  for (const auto& c : w.children) children.push_back(widget_to_json(c));
  j["children"] = std::move(children);
  return j;
}

bool guards_hold(const EnvState& s, const TransitionRule& rule) {
  for (const auto& g : rule.when) {
    const Widget* w = find_widget(s.root, g.widget);
    if (!w) return false;
    json actual = widget_field(*w, g.field);
    bool eq = actual == g.expected;
    if ((g.op == Guard::Op::Eq) != eq) return false;
  }
  return true;
}

// Evaluates every candidate against the same snapshot, then applies the
// effects of the ones that hold in document order.
template <typename Pred>
bool fire_rules(EnvState& s, Pred matches) {
  std::vector<const TransitionRule*> firing;
  for (const auto& rule : s.scenario->rules)
    if (matches(rule.trigger) && guards_hold(s, rule)) firing.push_back(&rule);
  for (const TransitionRule* r : firing) apply_effects(s, r->effects);
  return !firing.empty();
}

// Bubbles from `id` towards the root; fires at the first level with a match.
template <typename Pred>
void fire_bubbling(EnvState& s, const std::string& id, Pred matches) {
  for (const auto& level : ancestry(s.root, id))
    if (fire_rules(s, [&](const Trigger& t) { return t.widget == level && matches(t); })) return;
}

bool same_key_set(std::vector<std::string> a, std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

bool focus_ok(const EnvState& s, const Trigger& t) {
  return t.focus.empty() || (s.focus && *s.focus == t.focus);
}

void close_popups(EnvState& s) {
  std::vector<std::string> open;
  for (const auto& p : paint_order(s.root).items)
    if (p.widget->role == Role::Menu && p.widget->popup) open.push_back(p.widget->id);
  for (const auto& id : open) find_widget(s.root, id)->visible = false;
}

bool popup_open(const EnvState& s) {
  for (const auto& p : paint_order(s.root).items)
    if (p.widget->role == Role::Menu && p.widget->popup) return true;
  return false;
}

// A press outside every open popup closes them and is swallowed.
// Returns true when the press should proceed.
bool press_gate(EnvState& s, Point p) {
  if (!popup_open(s)) return true;
  auto hit = hit_test(s, p);
  if (hit) {
    for (const auto& item : paint_order(s.root).items) {
      const Widget* w = item.widget;
      if (w->role == Role::Menu && w->popup && subtree_contains(*w, *hit)) return true;
    }
  }
  close_popups(s);
  return false;
}

void do_click(EnvState& s, Point p, dsl::MouseButton button, int clicks) {
  auto hit = hit_test(s, p);
  if (!hit) return;
  Widget* w = find_widget(s.root, *hit);
  if (button == dsl::MouseButton::Left) {
    if (w->role == Role::Textbox) s.focus = w->id;
    if (w->role == Role::Checkbox && clicks % 2 == 1) w->selected = !w->selected;
  }
  fire_bubbling(s, *hit, [&](const Trigger& t) {
    return t.kind == TriggerKind::Click && t.button == button && t.clicks == clicks;
  });
}

void do_drag(EnvState& s, Point from, Point to) {
  auto src = hit_test(s, from);
  if (!src) return;
  auto dst = hit_test(s, to);
  Widget* w = find_widget(s.root, *src);
  if (w->role == Role::Slider) {
    double frac = static_cast<double>(to.x - w->bbox.x) / static_cast<double>(w->bbox.w);
    frac = std::clamp(frac, 0.0, 1.0);
    w->value = std::round(w->min + frac * (w->max - w->min));
  }
  fire_rules(s, [&](const Trigger& t) {
    return t.kind == TriggerKind::Drag && t.widget == *src && dst && t.to == *dst;
  });
}

void do_hotkey(EnvState& s, const std::vector<std::string>& keys) {
  fire_rules(s, [&](const Trigger& t) {
    return t.kind == TriggerKind::Hotkey && same_key_set(t.keys, keys) && focus_ok(s, t);
  });
}

void do_press(EnvState& s, const std::string& key) {
  if (!s.input.held_keys.empty()) {
    std::vector<std::string> chord = s.input.held_keys;
    if (std::find(chord.begin(), chord.end(), key) == chord.end()) chord.push_back(key);
    if (chord.size() >= 2) {
      do_hotkey(s, chord);
      return;
    }
  }
  if (key == "esc" && popup_open(s)) {
    close_popups(s);
    return;
  }
  if (key == "backspace" && s.focus) {
    Widget* w = find_widget(s.root, *s.focus);
    if (auto* text = std::get_if<std::string>(&w->value); text && !text->empty()) text->pop_back();
  }
  fire_rules(s, [&](const Trigger& t) {
    return t.kind == TriggerKind::Press && t.keys.size() == 1 && t.keys[0] == key &&
           focus_ok(s, t);
  });
}

void do_write(EnvState& s, const std::string& text) {
  if (!s.focus) return;
  Widget* w = find_widget(s.root, *s.focus);
  if (auto* cur = std::get_if<std::string>(&w->value)) *cur += text;
  else w->value = text;
  const std::string target = *s.focus;
  fire_rules(s, [&](const Trigger& t) { return t.kind == TriggerKind::Write && t.widget == target; });
}

void apply_fs(FileSystem& fs, const FsOp& op) {
  auto descendants = [&](const std::string& path) {
    std::vector<std::string> out;
    std::string prefix = path + "/";
    for (const auto& [p, e] : fs)
      if (p == path || p.rfind(prefix, 0) == 0) out.push_back(p);
    return out;
  };
  switch (op.kind) {
    case FsOp::Kind::Create:
      fs[op.path] = FileEntry{false, op.size};
      break;
    case FsOp::Kind::Mkdir:
      fs[op.path] = FileEntry{true, 0};
      break;
    case FsOp::Kind::Delete:
      for (const auto& p : descendants(op.path)) fs.erase(p);
      break;
    case FsOp::Kind::Move: {
      std::vector<std::pair<std::string, FileEntry>> moved;
      for (const auto& p : descendants(op.path)) {
        moved.emplace_back(op.to + p.substr(op.path.size()), fs[p]);
        fs.erase(p);
      }
      for (auto& [p, e] : moved) fs[p] = e;
      break;
    }
  }
}

}  // namespace

std::string_view to_string(Role role) {
  for (const auto& [r, name] : kRoleNames)
    if (r == role) return name;
  return "pane";
}

std::optional<Role> role_from_string(std::string_view name) {
  for (const auto& [r, n] : kRoleNames)
    if (n == name) return r;
  return std::nullopt;
}

json value_to_json(const Value& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  if (auto* d = std::get_if<double>(&v)) return *d;
  return nullptr;
}

Value value_from_json(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return j.get<double>();
  return std::monostate{};
}

std::string value_to_text(const Value& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  if (auto* d = std::get_if<double>(&v)) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *d);
    return ec == std::errc() ? std::string(buf, end) : std::string();
  }
  return {};
}

const Widget* find_widget(const Widget& root, std::string_view id) {
  if (root.id == id) return &root;
  for (const auto& c : root.children)
    if (const Widget* w = find_widget(c, id)) return w;
  return nullptr;
}

Widget* find_widget(Widget& root, std::string_view id) {
  return const_cast<Widget*>(find_widget(static_cast<const Widget&>(root), id));
}

json widget_field(const Widget& w, std::string_view field) {
  if (field == "visible") return w.visible;
  if (field == "enabled") return w.enabled;
  if (field == "selected") return w.selected;
  if (field == "value") return value_to_json(w.value);
  if (field.rfind("attr:", 0) == 0) {
    auto it = w.attrs.find(std::string(field.substr(5)));
    return it == w.attrs.end() ? json() : json(it->second);
  }
  return json();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

json state_to_json(const EnvState& s) {
  json j;
  j["screen"] = {s.screen.w, s.screen.h};
  j["tree"] = widget_to_json(s.root);
  j["focus"] = s.focus ? json(*s.focus) : json();
  json fs = json::object();
  for (const auto& [path, e] : s.fs) fs[path] = {{"dir", e.is_dir}, {"size", e.size}};
  j["fs"] = std::move(fs);
  json prefs = json::object();
  for (const auto& [k, v] : s.prefs) prefs[k] = v;
  j["prefs"] = std::move(prefs);
  j["goal_flags"] = s.goal_flags;
  return j;
}

std::uint64_t state_digest(const EnvState& s) { return fnv1a64(state_to_json(s).dump()); }

std::uint64_t render_digest(const RenderArtifact& a) {
  json elements = json::array();
  for (const auto& e : a.elements) {
    elements.push_back({{"bbox", {e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h}},
                        {"role", std::string(to_string(e.role))},
                        {"label", e.label},
                        {"selected", e.selected},
                        {"enabled", e.enabled},
                        {"focused", e.focused},
                        {"value", value_to_json(e.value)},
                        {"attrs", e.attrs}});
  }
  json j = {{"w", a.w}, {"h", a.h}, {"elements", std::move(elements)}};
  return fnv1a64(j.dump());
}

std::optional<std::string> hit_test(const EnvState& s, Point p) {
  PaintList paint = paint_order(s.root);
  const Widget* top_dialog = paint.dialogs.empty() ? nullptr : paint.dialogs.back();
  for (auto it = paint.items.rbegin(); it != paint.items.rend(); ++it) {
    if (top_dialog && it->dialog != top_dialog) continue;
    const Widget* w = it->widget;
    if (w->enabled && w->bbox.contains(p)) return w->id;
  }
  return std::nullopt;
}

bool is_effectively_visible(const EnvState& s, std::string_view id) {
  std::vector<const Widget*> path;
  if (!collect_path(s.root, id, path)) return false;
  return std::all_of(path.begin(), path.end(), [](const Widget* w) { return w->visible; });
}

void apply_effects(EnvState& s, const std::vector<Effect>& effects) {
  for (const auto& e : effects) {
    Widget* w = e.target.empty() ? nullptr : find_widget(s.root, e.target);
    switch (e.kind) {
      case Effect::Kind::SetVisible:
        if (w) w->visible = e.value.get<bool>();
        break;
      case Effect::Kind::ToggleVisible:
        if (w) w->visible = !w->visible;
        break;
      case Effect::Kind::SetSelected:
        if (w) w->selected = e.value.get<bool>();
        break;
      case Effect::Kind::ToggleSelected:
        if (w) w->selected = !w->selected;
        break;
      case Effect::Kind::SetValue:
        if (w) w->value = value_from_json(e.value);
        break;
      case Effect::Kind::SetAttr:
        if (w) w->attrs[e.attr] = e.value.get<std::string>();
        break;
      case Effect::Kind::Focus:
        if (w) s.focus = w->id;
        break;
      case Effect::Kind::OpenDialog:
        if (w) w->visible = true;
        break;
      case Effect::Kind::CloseDialog:
        if (w) w->visible = false;
        break;
      case Effect::Kind::Fs:
        apply_fs(s.fs, e.fs);
        break;
      case Effect::Kind::MarkGoalFlag:
        s.goal_flags.insert(e.target);
        break;
      case Effect::Kind::ClearGoalFlag:
        s.goal_flags.erase(e.target);
        break;
      case Effect::Kind::SetPref:
        s.prefs[e.target] = e.value;
        break;
    }
  }
  if (s.focus) {
    const Widget* f = find_widget(s.root, *s.focus);
    if (!f || f->role != Role::Textbox || !f->enabled || !is_effectively_visible(s, *s.focus))
      s.focus.reset();
  }
}

EnvState step(const EnvState& state, const dsl::Action& action) {
  EnvState s = state;
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, dsl::MoveTo>) {
          s.input.pointer = {a.x, a.y};
        } else if constexpr (std::is_same_v<T, dsl::Click>) {
          s.input.pointer = {a.x, a.y};
          if (press_gate(s, s.input.pointer)) do_click(s, s.input.pointer, a.button, a.clicks);
        } else if constexpr (std::is_same_v<T, dsl::DragTo>) {
          Point from = s.input.pointer;
          s.input.pointer = {a.x, a.y};
          if (press_gate(s, from)) do_drag(s, from, s.input.pointer);
        } else if constexpr (std::is_same_v<T, dsl::MouseDown>) {
          s.input.pressed = true;
          s.input.pressed_button = a.button;
          s.input.press_point = s.input.pointer;
          s.input.press_swallowed = !press_gate(s, s.input.pointer);
        } else if constexpr (std::is_same_v<T, dsl::MouseUp>) {
          if (s.input.pressed && !s.input.press_swallowed) {
            if (s.input.press_point == s.input.pointer)
              do_click(s, s.input.pointer, s.input.pressed_button, 1);
            else
              do_drag(s, s.input.press_point, s.input.pointer);
          }
          s.input.pressed = false;
          s.input.press_swallowed = false;
        } else if constexpr (std::is_same_v<T, dsl::Write>) {
          do_write(s, a.text);
        } else if constexpr (std::is_same_v<T, dsl::Press>) {
          do_press(s, a.key);
        } else if constexpr (std::is_same_v<T, dsl::Hotkey>) {
          do_hotkey(s, a.keys);
        } else if constexpr (std::is_same_v<T, dsl::KeyDown>) {
          auto& held = s.input.held_keys;
          if (std::find(held.begin(), held.end(), a.key) == held.end()) held.push_back(a.key);
        } else if constexpr (std::is_same_v<T, dsl::KeyUp>) {
          auto& held = s.input.held_keys;
          held.erase(std::remove(held.begin(), held.end(), a.key), held.end());
        } else if constexpr (std::is_same_v<T, dsl::Scroll>) {
          auto hit = hit_test(s, s.input.pointer);
          if (hit && a.amount != 0) {
            int dir = a.amount > 0 ? 1 : -1;
            fire_bubbling(s, *hit, [&](const Trigger& t) {
              return t.kind == TriggerKind::Scroll && (t.direction == 0 || t.direction == dir);
            });
          }
        }
      },
      action);
  return s;
}

Observation observe(const EnvState& s) {
  Observation obs;
  PaintList paint = paint_order(s.root);
  obs.screenshot.w = s.screen.w;
  obs.screenshot.h = s.screen.h;
  for (const auto& item : paint.items) {
    const Widget* w = item.widget;
    ElementRender r;
    r.role = w->role;
    r.label = w->label;
    r.bbox = w->bbox;
    r.selected = w->selected;
    r.enabled = w->enabled;
    r.focused = s.focus && *s.focus == w->id;
    r.value = w->value;
    r.attrs = w->attrs;
    obs.screenshot.elements.push_back(std::move(r));
  }
  obs.screenshot.digest = render_digest(obs.screenshot);

  // Metadata follows document order; while a dialog is open only its subtree is exposed.
  const Widget* top_dialog = paint.dialogs.empty() ? nullptr : paint.dialogs.back();
  std::vector<const Widget*> visible;
  for (const auto& item : paint.items)
    if (!top_dialog || item.dialog == top_dialog) visible.push_back(item.widget);
  auto emit = [&](auto&& self, const Widget& w) -> void {
    if (!w.visible) return;
    if (&w != &s.root && w.enabled &&
        std::find(visible.begin(), visible.end(), &w) != visible.end()) {
      obs.metadata.push_back({w.id, w.role, w.label, w.bbox, w.selected, w.value});
    }
    for (const auto& c : w.children) self(self, c);
  };
  emit(emit, s.root);
  return obs;
}

EnvState run_script(const EnvState& state, const dsl::ActionScript& script) {
  EnvState s = state;
  for (const auto& a : script.actions) s = step(s, a);
  return s;
}

EnvState apply_preactions(const EnvState& state, const dsl::ActionScript& pre) {
  auto violations = dsl::validate_bounds(pre, state.screen);
  if (!violations.empty())
    throw PreactionOutOfBounds(violations.front().index, {violations.front().x, violations.front().y});
  return run_script(state, pre);
}

std::string parent_dir(std::string_view path) {
  auto pos = path.rfind('/');
  if (pos == std::string_view::npos) return {};
  if (pos == 0) return "/";
  return std::string(path.substr(0, pos));
}

bool fs_status(const EnvState& s, const FsPredicate& p) {
  bool exists = s.fs.count(p.path) > 0;
  switch (p.kind) {
    case FsPredicate::Kind::Exists:
      return exists;
    case FsPredicate::Kind::Absent:
      return !exists;
    case FsPredicate::Kind::InDir:
      return exists && parent_dir(p.path) == p.dir;
  }
  return false;
}

}  // namespace deskagent::env
