// Scenario document loading and validation.

#include <fstream>
#include <set>
#include <sstream>

#include "deskagent/sim_env.hpp"

namespace deskagent::env {

using nlohmann::json;

namespace {

class Loader {
 public:
  explicit Loader(const json& doc) : doc_(doc) {}

  EnvState load(const Prefs* carried) {
    if (!doc_.is_object()) throw SchemaError("", "scenario document must be an object");
    auto scenario = std::make_shared<Scenario>();
    scenario->name = optional_string(doc_, "", "name");

    const json& screen = require(doc_, "", "screen", json::value_t::object);
    scenario->screen.w = require_int(screen, "/screen", "w");
    scenario->screen.h = require_int(screen, "/screen", "h");
    if (scenario->screen.w <= 0 || scenario->screen.h <= 0)
      throw SchemaError("/screen", "screen dimensions must be positive");
    screen_ = scenario->screen;

    EnvState state;
    state.screen = scenario->screen;
    state.root.id = "";
    state.root.role = Role::Pane;
    state.root.bbox = {0, 0, screen_.w, screen_.h};

    const json& widgets = require(doc_, "", "widgets", json::value_t::array);
    for (std::size_t i = 0; i < widgets.size(); ++i)
      state.root.children.push_back(parse_widget(widgets[i], "/widgets/" + std::to_string(i)));

    if (doc_.contains("goal_flags")) {
      const json& flags = require(doc_, "", "goal_flags", json::value_t::array);
      for (std::size_t i = 0; i < flags.size(); ++i) {
        if (!flags[i].is_string())
          throw SchemaError("/goal_flags/" + std::to_string(i), "expected string");
        scenario->declared_flags.insert(flags[i].get<std::string>());
      }
    }
    flags_ = &scenario->declared_flags;

    if (doc_.contains("rules")) {
      const json& rules = require(doc_, "", "rules", json::value_t::array);
      for (std::size_t i = 0; i < rules.size(); ++i)
        scenario->rules.push_back(parse_rule(rules[i], "/rules/" + std::to_string(i)));
    }

    if (doc_.contains("fs")) {
      const json& fs = require(doc_, "", "fs", json::value_t::object);
      for (const auto& [path, entry] : fs.items()) {
        std::string where = "/fs/" + path;
        check_path(path, where);
        if (!entry.is_object()) throw SchemaError(where, "expected object");
        FileEntry fe;
        fe.is_dir = optional_bool(entry, where, "dir", false);
        fe.size = entry.contains("size") ? require_int(entry, where, "size") : 0;
        state.fs[path] = fe;
      }
    }

    if (doc_.contains("prefs")) {
      const json& prefs = require(doc_, "", "prefs", json::value_t::object);
      if (prefs.contains("defaults")) {
        const json& defaults = require(prefs, "/prefs", "defaults", json::value_t::object);
        for (const auto& [k, v] : defaults.items()) state.prefs[k] = v;
      }
      if (prefs.contains("bindings")) {
        const json& bindings = require(prefs, "/prefs", "bindings", json::value_t::array);
        for (std::size_t i = 0; i < bindings.size(); ++i) {
          std::string where = "/prefs/bindings/" + std::to_string(i);
          const json& b = bindings[i];
          if (!b.is_object()) throw SchemaError(where, "expected object");
          PrefBinding pb;
          pb.key = require_string(b, where, "key");
          if (!b.contains("equals")) throw SchemaError(where + "/equals", "missing field");
          pb.equals = b.at("equals");
          pb.effects = parse_effects(b, where);
          scenario->pref_bindings.push_back(std::move(pb));
        }
      }
    }

    for (const auto& key : doc_.items()) {
      static const std::set<std::string> known = {"name", "screen", "widgets", "rules",
                                                  "fs", "goal_flags", "prefs", "description"};
      if (!known.count(key.key())) throw SchemaError("/" + key.key(), "unknown top-level key");
    }

    if (carried)
      for (const auto& [k, v] : *carried) state.prefs[k] = v;

    state.scenario = scenario;
    apply_pref_bindings(state);
    return state;
  }

 private:
  static const json& require(const json& obj, const std::string& path, const char* key,
                             json::value_t type) {
    if (!obj.contains(key)) throw SchemaError(path + "/" + key, "missing field");
    const json& v = obj.at(key);
    if (v.type() != type) throw SchemaError(path + "/" + key, "wrong type");
    return v;
  }

  static int require_int(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw SchemaError(path + "/" + key, "missing field");
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw SchemaError(path + "/" + key, "expected integer");
    return v.get<int>();
  }

  static std::string require_string(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw SchemaError(path + "/" + key, "missing field");
    const json& v = obj.at(key);
    if (!v.is_string()) throw SchemaError(path + "/" + key, "expected string");
    return v.get<std::string>();
  }

  static std::string optional_string(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) return {};
    return require_string(obj, path, key);
  }

  static bool optional_bool(const json& obj, const std::string& path, const char* key, bool def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw SchemaError(path + "/" + key, "expected boolean");
    return v.get<bool>();
  }

  static void check_path(const std::string& path, const std::string& where) {
    if (path.empty() || path.front() != '/') throw SchemaError(where, "path must be absolute");
  }

  Widget parse_widget(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    static const std::set<std::string> known = {"id",       "role",   "label",   "bbox",
                                                "visible",  "enabled", "selected", "value",
                                                "children", "popup",  "min",     "max",
                                                "attrs"};
    for (const auto& item : j.items())
      if (!known.count(item.key())) throw SchemaError(path + "/" + item.key(), "unknown field");

    Widget w;
    w.id = require_string(j, path, "id");
    if (w.id.empty()) throw SchemaError(path + "/id", "empty id");
    if (!ids_.insert(w.id).second) throw SchemaError(path + "/id", "duplicate id '" + w.id + "'");

    auto role = role_from_string(require_string(j, path, "role"));
    if (!role) throw SchemaError(path + "/role", "unknown role");
    w.role = *role;
    w.label = optional_string(j, path, "label");

    const json& bbox = require(j, path, "bbox", json::value_t::array);
    if (bbox.size() != 4) throw SchemaError(path + "/bbox", "expected [x, y, w, h]");
    int b[4];
    for (int i = 0; i < 4; ++i) {
      if (!bbox[i].is_number_integer())
        throw SchemaError(path + "/bbox/" + std::to_string(i), "expected integer");
      b[i] = bbox[i].get<int>();
    }
    w.bbox = {b[0], b[1], b[2], b[3]};
    if (w.bbox.x < 0 || w.bbox.y < 0 || w.bbox.w <= 0 || w.bbox.h <= 0 ||
        w.bbox.x + w.bbox.w > screen_.w || w.bbox.y + w.bbox.h > screen_.h)
      throw SchemaError(path + "/bbox", "box must be non-empty and inside the screen");

    w.visible = optional_bool(j, path, "visible", true);
    w.enabled = optional_bool(j, path, "enabled", true);
    w.selected = optional_bool(j, path, "selected", false);
    w.popup = optional_bool(j, path, "popup", false);
    if (j.contains("value")) {
      const json& v = j.at("value");
      if (!(v.is_null() || v.is_string() || v.is_number()))
        throw SchemaError(path + "/value", "expected string, number or null");
      w.value = value_from_json(v);
    }
    if (j.contains("min")) {
      if (!j.at("min").is_number()) throw SchemaError(path + "/min", "expected number");
      w.min = j.at("min").get<double>();
    }
    if (j.contains("max")) {
      if (!j.at("max").is_number()) throw SchemaError(path + "/max", "expected number");
      w.max = j.at("max").get<double>();
    }
    if (w.role == Role::Slider && !(w.max > w.min))
      throw SchemaError(path + "/max", "slider max must exceed min");
    if (j.contains("attrs")) {
      const json& attrs = require(j, path, "attrs", json::value_t::object);
      for (const auto& [k, v] : attrs.items()) {
        if (!v.is_string()) throw SchemaError(path + "/attrs/" + k, "expected string");
        w.attrs[k] = v.get<std::string>();
      }
    }
    if (j.contains("children")) {
      const json& children = require(j, path, "children", json::value_t::array);
      for (std::size_t i = 0; i < children.size(); ++i)
        w.children.push_back(parse_widget(children[i], path + "/children/" + std::to_string(i)));
    }
    return w;
  }

  void check_widget(const std::string& id, const std::string& path) const {
    if (!ids_.count(id)) throw DanglingWidgetRef(path, id);
  }

  static std::vector<std::string> parse_keys(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected array of keys");
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_string() || !dsl::is_known_key(j[i].get<std::string>()))
        throw SchemaError(path + "/" + std::to_string(i), "unknown key");
      keys.push_back(j[i].get<std::string>());
    }
    return keys;
  }

  Trigger parse_trigger(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    Trigger t;
    const std::string kind = require_string(j, path, "kind");
    if (kind == "click") {
      t.kind = TriggerKind::Click;
      t.widget = require_string(j, path, "widget");
      check_widget(t.widget, path + "/widget");
      std::string button = j.contains("button") ? require_string(j, path, "button") : "left";
      if (button == "left") t.button = dsl::MouseButton::Left;
      else if (button == "right") t.button = dsl::MouseButton::Right;
      else if (button == "middle") t.button = dsl::MouseButton::Middle;
      else throw SchemaError(path + "/button", "unknown button");
      t.clicks = j.contains("clicks") ? require_int(j, path, "clicks") : 1;
      if (t.clicks < 1) throw SchemaError(path + "/clicks", "must be >= 1");
    } else if (kind == "write") {
      t.kind = TriggerKind::Write;
      t.widget = require_string(j, path, "widget");
      check_widget(t.widget, path + "/widget");
    } else if (kind == "press") {
      t.kind = TriggerKind::Press;
      std::string key = require_string(j, path, "key");
      if (!dsl::is_known_key(key)) throw SchemaError(path + "/key", "unknown key");
      t.keys = {key};
    } else if (kind == "hotkey") {
      t.kind = TriggerKind::Hotkey;
      if (!j.contains("keys")) throw SchemaError(path + "/keys", "missing field");
      t.keys = parse_keys(j.at("keys"), path + "/keys");
      if (t.keys.size() < 2) throw SchemaError(path + "/keys", "hotkey needs two or more keys");
    } else if (kind == "scroll") {
      t.kind = TriggerKind::Scroll;
      t.widget = require_string(j, path, "widget");
      check_widget(t.widget, path + "/widget");
      if (j.contains("direction")) {
        std::string d = require_string(j, path, "direction");
        if (d == "up") t.direction = 1;
        else if (d == "down") t.direction = -1;
        else throw SchemaError(path + "/direction", "expected up or down");
      }
    } else if (kind == "drag") {
      t.kind = TriggerKind::Drag;
      t.widget = require_string(j, path, "from");
      check_widget(t.widget, path + "/from");
      t.to = require_string(j, path, "to");
      check_widget(t.to, path + "/to");
    } else {
      throw SchemaError(path + "/kind", "unknown trigger kind '" + kind + "'");
    }
    if (j.contains("focus")) {
      t.focus = require_string(j, path, "focus");
      check_widget(t.focus, path + "/focus");
    }
    return t;
  }

  Guard parse_guard(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    Guard g;
    g.widget = require_string(j, path, "widget");
    check_widget(g.widget, path + "/widget");
    g.field = require_string(j, path, "field");
    static const std::set<std::string> fields = {"visible", "enabled", "selected", "value"};
    if (!fields.count(g.field) && g.field.rfind("attr:", 0) != 0)
      throw SchemaError(path + "/field", "unknown field");
    if (j.contains("eq")) {
      g.op = Guard::Op::Eq;
      g.expected = j.at("eq");
    } else if (j.contains("ne")) {
      g.op = Guard::Op::Ne;
      g.expected = j.at("ne");
    } else {
      throw SchemaError(path, "guard needs eq or ne");
    }
    return g;
  }

  std::vector<Effect> parse_effects(const json& j, const std::string& path) {
    const json& effects = require(j, path, "effects", json::value_t::array);
    std::vector<Effect> out;
    for (std::size_t i = 0; i < effects.size(); ++i)
      out.push_back(parse_effect(effects[i], path + "/effects/" + std::to_string(i)));
    return out;
  }

  Effect parse_effect(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    Effect e;
    const std::string op = require_string(j, path, "op");
    auto widget_target = [&] {
      e.target = require_string(j, path, "target");
      check_widget(e.target, path + "/target");
    };
    auto bool_value = [&] {
      if (!j.contains("value") || !j.at("value").is_boolean())
        throw SchemaError(path + "/value", "expected boolean");
      e.value = j.at("value");
    };
    if (op == "set-visible") {
      e.kind = Effect::Kind::SetVisible;
      widget_target();
      bool_value();
    } else if (op == "toggle-visible") {
      e.kind = Effect::Kind::ToggleVisible;
      widget_target();
    } else if (op == "set-selected") {
      e.kind = Effect::Kind::SetSelected;
      widget_target();
      bool_value();
    } else if (op == "toggle-selected") {
      e.kind = Effect::Kind::ToggleSelected;
      widget_target();
    } else if (op == "set-value") {
      e.kind = Effect::Kind::SetValue;
      widget_target();
      if (!j.contains("value")) throw SchemaError(path + "/value", "missing field");
      const json& v = j.at("value");
      if (!(v.is_null() || v.is_string() || v.is_number()))
        throw SchemaError(path + "/value", "expected string, number or null");
      e.value = v;
    } else if (op == "set-attr") {
      e.kind = Effect::Kind::SetAttr;
      widget_target();
      e.attr = require_string(j, path, "attr");
      e.value = require_string(j, path, "value");
    } else if (op == "focus") {
      e.kind = Effect::Kind::Focus;
      widget_target();
    } else if (op == "open-dialog" || op == "close-dialog") {
      e.kind = op == "open-dialog" ? Effect::Kind::OpenDialog : Effect::Kind::CloseDialog;
      widget_target();
      if (role_of(e.target) != Role::Dialog)
        throw SchemaError(path + "/target", "target is not a dialog");
    } else if (op == "fs-op") {
      e.kind = Effect::Kind::Fs;
      const std::string kind = require_string(j, path, "kind");
      if (kind == "create") e.fs.kind = FsOp::Kind::Create;
      else if (kind == "mkdir") e.fs.kind = FsOp::Kind::Mkdir;
      else if (kind == "delete") e.fs.kind = FsOp::Kind::Delete;
      else if (kind == "move") e.fs.kind = FsOp::Kind::Move;
      else throw SchemaError(path + "/kind", "unknown fs-op kind");
      e.fs.path = require_string(j, path, "path");
      check_path(e.fs.path, path + "/path");
      if (e.fs.kind == FsOp::Kind::Move) {
        e.fs.to = require_string(j, path, "to");
        check_path(e.fs.to, path + "/to");
      }
      if (j.contains("size")) e.fs.size = require_int(j, path, "size");
    } else if (op == "mark-goal-flag" || op == "clear-goal-flag") {
      e.kind = op == "mark-goal-flag" ? Effect::Kind::MarkGoalFlag : Effect::Kind::ClearGoalFlag;
      e.target = require_string(j, path, "flag");
      if (!flags_->count(e.target))
        throw SchemaError(path + "/flag", "goal flag '" + e.target + "' not declared");
    } else if (op == "set-pref") {
      e.kind = Effect::Kind::SetPref;
      e.target = require_string(j, path, "key");
      if (!j.contains("value")) throw SchemaError(path + "/value", "missing field");
      e.value = j.at("value");
    } else {
      throw SchemaError(path + "/op", "unknown effect '" + op + "'");
    }
    return e;
  }

  TransitionRule parse_rule(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    TransitionRule r;
    if (!j.contains("trigger")) throw SchemaError(path + "/trigger", "missing field");
    r.trigger = parse_trigger(j.at("trigger"), path + "/trigger");
    if (j.contains("when")) {
      const json& when = require(j, path, "when", json::value_t::array);
      for (std::size_t i = 0; i < when.size(); ++i)
        r.when.push_back(parse_guard(when[i], path + "/when/" + std::to_string(i)));
    }
    r.effects = parse_effects(j, path);
    return r;
  }

  Role role_of(const std::string& id) const {
    return role_lookup(doc_.at("widgets"), id).value_or(Role::Pane);
  }

  static std::optional<Role> role_lookup(const json& widgets, const std::string& id) {
    for (const auto& w : widgets) {
      if (w.at("id") == id) return role_from_string(w.at("role").get<std::string>());
      if (w.contains("children"))
        if (auto r = role_lookup(w.at("children"), id)) return r;
    }
    return std::nullopt;
  }

  const json& doc_;
  ScreenSize screen_;
  std::set<std::string> ids_;
  const std::set<std::string>* flags_ = nullptr;
};

}  // namespace

void apply_pref_bindings(EnvState& state) {
  for (const auto& binding : state.scenario->pref_bindings) {
    auto it = state.prefs.find(binding.key);
    if (it != state.prefs.end() && it->second == binding.equals)
      apply_effects(state, binding.effects);
  }
}

EnvState load_scenario(const json& doc, const Prefs* carried) {
  return Loader(doc).load(carried);
}

EnvState load_scenario_file(const std::filesystem::path& path, const Prefs* carried) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string(), "cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return load_scenario(doc, carried);
}

}  // namespace deskagent::env
