#pragma once

// Mouse/keyboard action language.
//
//   script := (line NL)*
//   line   := import_stmt | call (";" call)*
//   call   := ident "(" args? ")"
//   args   := arg ("," arg)*
//   arg    := literal | ident "=" literal
//
// Literals are integers, floats and single- or double-quoted strings.
// The full grammar with the accepted identifiers lives in docs/action-grammar.md.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "deskagent/error.hpp"

namespace deskagent::dsl {

enum class MouseButton { Left, Right, Middle };

std::string_view to_string(MouseButton b);

struct MoveTo {
  int x = 0;
  int y = 0;
  bool operator==(const MoveTo&) const = default;
};

struct Click {
  int x = 0;
  int y = 0;
  MouseButton button = MouseButton::Left;
  int clicks = 1;
  bool operator==(const Click&) const = default;
};

struct Write {
  std::string text;
  bool operator==(const Write&) const = default;
};

struct Hotkey {
  std::vector<std::string> keys;
  bool operator==(const Hotkey&) const = default;
};

struct Scroll {
  int amount = 0;
  bool operator==(const Scroll&) const = default;
};

struct DragTo {
  int x = 0;
  int y = 0;
  double duration = 0.0;
  bool operator==(const DragTo&) const = default;
};

struct MouseDown {
  MouseButton button = MouseButton::Left;
  bool operator==(const MouseDown&) const = default;
};

struct MouseUp {
  MouseButton button = MouseButton::Left;
  bool operator==(const MouseUp&) const = default;
};

struct Press {
  std::string key;
  bool operator==(const Press&) const = default;
};

struct KeyDown {
  std::string key;
  bool operator==(const KeyDown&) const = default;
};

struct KeyUp {
  std::string key;
  bool operator==(const KeyUp&) const = default;
};

using Action = std::variant<MoveTo, Click, Write, Hotkey, Scroll, DragTo, MouseDown,
                            MouseUp, Press, KeyDown, KeyUp>;

struct ActionScript {
  std::vector<Action> actions;
  std::string source;
};

/// Byte range [begin, end) into the text handed to the parser.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class ParseErrorKind { Syntax, UnknownAction, Arity, ArgType };

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, SourceSpan span, std::size_t line, const std::string& message);

  ParseErrorKind kind() const noexcept { return kind_; }
  SourceSpan span() const noexcept { return span_; }
  /// 1-based line number within the parsed text.
  std::size_t line() const noexcept { return line_; }

 private:
  ParseErrorKind kind_;
  SourceSpan span_;
  std::size_t line_;
};

enum class ScriptMode {
  Strict,     // call statements only
  Preaction,  // also skips import lines, comments and `pyautogui.` prefixes
};

Action parse_action(std::string_view text);
ActionScript parse_script(std::string_view text, ScriptMode mode = ScriptMode::Strict);

/// Canonical single-line call text; parse_action(serialize_action(a)) == a.
std::string serialize_action(const Action& action);
/// One canonical call per line.
std::string serialize_script(const ActionScript& script);

struct ScreenSize {
  int w = 0;
  int h = 0;
  bool operator==(const ScreenSize&) const = default;
};

struct BoundsViolation {
  std::size_t index = 0;  // position in the script
  int x = 0;
  int y = 0;
};

/// Every coordinate-bearing action whose point lies outside [0,w)x[0,h).
std::vector<BoundsViolation> validate_bounds(const ActionScript& script, ScreenSize screen);

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

/// The pointer target of MoveTo/Click/DragTo, nothing for the rest.
std::optional<Point> target_point(const Action& action);

/// Closed key vocabulary: a-z, 0-9, f1-f12, modifiers, navigation and editing keys.
std::span<const std::string_view> key_table();
bool is_known_key(std::string_view key);

/// The accepted call identifiers, aliases included.
std::span<const std::string_view> action_names();

}  // namespace deskagent::dsl
