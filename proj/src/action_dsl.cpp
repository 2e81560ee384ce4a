#include "deskagent/action_dsl.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace deskagent::dsl {
namespace {

constexpr std::array<std::string_view, 13> kActionNames = {
    "click",   "rightClick", "doubleClick", "moveTo", "write",   "hotkey", "scroll",
    "dragTo",  "mouseDown",  "mouseUp",     "press",  "keyDown", "keyUp"};

constexpr std::array<std::string_view, 36 + 12 + 14> kKeyTable = {
    "a",     "b",         "c",     "d",      "e",     "f",    "g",     "h",   "i",
    "j",     "k",         "l",     "m",      "n",     "o",    "p",     "q",   "r",
    "s",     "t",         "u",     "v",      "w",     "x",    "y",     "z",   "0",
    "1",     "2",         "3",     "4",      "5",     "6",    "7",     "8",   "9",
    "f1",    "f2",        "f3",    "f4",     "f5",    "f6",   "f7",    "f8",  "f9",
    "f10",   "f11",       "f12",   "ctrl",   "shift", "alt",  "win",   "enter",
    "esc",   "tab",       "delete", "backspace", "up", "down", "left", "right", "space"};

std::string_view error_code(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Syntax: return "SyntaxError";
    case ParseErrorKind::UnknownAction: return "UnknownAction";
    case ParseErrorKind::Arity: return "ArityError";
    case ParseErrorKind::ArgType: return "ArgTypeError";
  }
  return "ParseError";
}

struct Literal {
  enum class Type { Int, Float, String } type = Type::Int;
  long long i = 0;
  double f = 0.0;
  std::string s;
  SourceSpan span;
};

struct Arg {
  std::string name;  // empty for positional
  SourceSpan span;
  Literal value;
};

struct Call {
  std::string name;
  SourceSpan name_span;
  SourceSpan span;
  std::vector<Arg> args;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Cursor {
 public:
  // `text` is a slice of the original input starting at absolute offset `base`.
  Cursor(std::string_view text, std::size_t base, std::size_t line)
      : text_(text), base_(base), line_(line) {}

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  std::size_t abs() const { return base_ + pos_; }
  std::size_t line() const { return line_; }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(ParseErrorKind kind, SourceSpan span, const std::string& msg) const {
    throw ParseError(kind, span, line_, msg);
  }

  [[noreturn]] void fail_here(const std::string& msg) const {
    const std::size_t end = at_end() ? abs() : abs() + 1;
    fail(ParseErrorKind::Syntax, {std::min(abs(), base_ + text_.size()), std::min(end, base_ + text_.size())},
         msg);
  }

  void expect(char c, const char* what) {
    if (!consume(c)) fail_here(std::string("expected ") + what);
  }

  std::string ident(bool allow_dots) {
    skip_ws();
    if (!is_ident_start(peek())) fail_here("expected identifier");
    const std::size_t start = pos_;
    while (!at_end() && (is_ident_char(text_[pos_]) ||
                         (allow_dots && text_[pos_] == '.' && pos_ + 1 < text_.size() &&
                          is_ident_start(text_[pos_ + 1])))) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  Literal literal() {
    skip_ws();
    const char c = peek();
    if (c == '\'' || c == '"') return string_literal();
    if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) return number();
    fail_here("expected a literal");
  }

  Call call(bool allow_dots) {
    skip_ws();
    Call out;
    const std::size_t start = abs();
    out.name = ident(allow_dots);
    out.name_span = {start, abs()};
    expect('(', "'('");
    skip_ws();
    if (!consume(')')) {
      for (;;) {
        out.args.push_back(arg());
        if (consume(')')) break;
        expect(',', "',' or ')'");
      }
    }
    out.span = {start, abs()};
    return out;
  }

 private:
  Arg arg() {
    skip_ws();
    Arg a;
    const std::size_t start = abs();
    if (is_ident_start(peek())) {
      a.name = ident(false);
      expect('=', "'=' after keyword");
    }
    a.value = literal();
    a.span = {start, abs()};
    return a;
  }

  Literal string_literal() {
    Literal lit;
    lit.type = Literal::Type::String;
    const std::size_t start = abs();
    const char quote = text_[pos_++];
    for (;;) {
      if (at_end()) fail(ParseErrorKind::Syntax, {start, abs()}, "unterminated string literal");
      const char c = text_[pos_++];
      if (c == quote) break;
      if (c != '\\') {
        lit.s.push_back(c);
        continue;
      }
      if (at_end()) fail(ParseErrorKind::Syntax, {start, abs()}, "unterminated escape");
      const char e = text_[pos_++];
      switch (e) {
        case 'n': lit.s.push_back('\n'); break;
        case 't': lit.s.push_back('\t'); break;
        case 'r': lit.s.push_back('\r'); break;
        case '\\': lit.s.push_back('\\'); break;
        case '\'': lit.s.push_back('\''); break;
        case '"': lit.s.push_back('"'); break;
        case 'x': {
          unsigned value = 0;
          if (pos_ + 2 > text_.size() ||
              std::from_chars(text_.data() + pos_, text_.data() + pos_ + 2, value, 16).ptr !=
                  text_.data() + pos_ + 2) {
            fail(ParseErrorKind::Syntax, {start, abs()}, "bad \\x escape");
          }
          pos_ += 2;
          lit.s.push_back(static_cast<char>(value));
          break;
        }
        default: fail(ParseErrorKind::Syntax, {abs() - 2, abs()}, "unknown escape sequence");
      }
    }
    lit.span = {start, abs()};
    return lit;
  }

  Literal number() {
    Literal lit;
    const std::size_t start = pos_;
    if (peek() == '-' || peek() == '+') ++pos_;
    bool is_float = false;
    while (!at_end()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        ++pos_;
        if ((c == 'e' || c == 'E') && (peek() == '-' || peek() == '+')) ++pos_;
      } else {
        break;
      }
    }
    std::string_view raw = text_.substr(start, pos_ - start);
    lit.span = {base_ + start, abs()};
    // from_chars rejects a leading '+'
    if (!raw.empty() && raw.front() == '+') raw.remove_prefix(1);
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    if (is_float) {
      lit.type = Literal::Type::Float;
      const auto res = std::from_chars(first, last, lit.f);
      if (res.ec != std::errc() || res.ptr != last) fail(ParseErrorKind::Syntax, lit.span, "malformed number");
    } else {
      lit.type = Literal::Type::Int;
      const auto res = std::from_chars(first, last, lit.i);
      if (res.ec == std::errc::result_out_of_range) {
        fail(ParseErrorKind::ArgType, lit.span, "integer out of range");
      }
      if (res.ec != std::errc() || res.ptr != last) fail(ParseErrorKind::Syntax, lit.span, "malformed number");
    }
    return lit;
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

// Checks positional/keyword argument shape and converts literals.
class ArgBinder {
 public:
  ArgBinder(const Call& call, std::size_t line) : call_(call), line_(line) {}

  [[noreturn]] void fail(ParseErrorKind kind, SourceSpan span, const std::string& msg) const {
    throw ParseError(kind, span, line_, call_.name + ": " + msg);
  }

  std::vector<const Arg*> positional(std::size_t min, std::size_t max) const {
    std::vector<const Arg*> out;
    bool seen_keyword = false;
    for (const auto& a : call_.args) {
      if (!a.name.empty()) {
        seen_keyword = true;
        continue;
      }
      if (seen_keyword) fail(ParseErrorKind::Syntax, a.span, "positional argument after keyword argument");
      out.push_back(&a);
    }
    if (out.size() < min || out.size() > max) {
      std::ostringstream msg;
      msg << "expected ";
      if (min == max) {
        msg << min;
      } else if (max == std::numeric_limits<std::size_t>::max()) {
        msg << "at least " << min;
      } else {
        msg << min << " to " << max;
      }
      msg << " positional argument(s), got " << out.size();
      fail(ParseErrorKind::Arity, call_.span, msg.str());
    }
    return out;
  }

  /// Keyword arguments restricted to `allowed`; duplicates rejected.
  const Arg* keyword(std::string_view name, std::initializer_list<std::string_view> allowed) const {
    const Arg* found = nullptr;
    for (const auto& a : call_.args) {
      if (a.name.empty()) continue;
      if (std::find(allowed.begin(), allowed.end(), a.name) == allowed.end()) {
        fail(ParseErrorKind::ArgType, a.span, "unexpected keyword argument '" + a.name + "'");
      }
      if (a.name == name) {
        if (found) fail(ParseErrorKind::ArgType, a.span, "duplicate keyword argument '" + a.name + "'");
        found = &a;
      }
    }
    return found;
  }

  int coordinate(const Arg& a) const {
    if (a.value.type != Literal::Type::Int) fail(ParseErrorKind::ArgType, a.span, "coordinates must be integers");
    if (a.value.i < 0) fail(ParseErrorKind::ArgType, a.span, "coordinates must be non-negative");
    if (a.value.i > std::numeric_limits<int>::max()) fail(ParseErrorKind::ArgType, a.span, "coordinate too large");
    return static_cast<int>(a.value.i);
  }

  int integer(const Arg& a) const {
    if (a.value.type != Literal::Type::Int) fail(ParseErrorKind::ArgType, a.span, "expected an integer");
    if (a.value.i < std::numeric_limits<int>::min() || a.value.i > std::numeric_limits<int>::max()) {
      fail(ParseErrorKind::ArgType, a.span, "integer out of range");
    }
    return static_cast<int>(a.value.i);
  }

  double number(const Arg& a) const {
    if (a.value.type == Literal::Type::String) fail(ParseErrorKind::ArgType, a.span, "expected a number");
    return a.value.type == Literal::Type::Int ? static_cast<double>(a.value.i) : a.value.f;
  }

  const std::string& string(const Arg& a) const {
    if (a.value.type != Literal::Type::String) fail(ParseErrorKind::ArgType, a.span, "expected a string");
    return a.value.s;
  }

  std::string key(const Arg& a) const {
    std::string k = string(a);
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!is_known_key(k)) fail(ParseErrorKind::ArgType, a.span, "unknown key '" + string(a) + "'");
    return k;
  }

  MouseButton button(const Arg& a) const {
    const std::string& s = string(a);
    if (s == "left") return MouseButton::Left;
    if (s == "right") return MouseButton::Right;
    if (s == "middle") return MouseButton::Middle;
    fail(ParseErrorKind::ArgType, a.span, "unknown mouse button '" + s + "'");
  }

 private:
  const Call& call_;
  std::size_t line_;
};

Action build_action(const Call& call, std::size_t line) {
  const ArgBinder b(call, line);
  const std::string& n = call.name;
  constexpr auto kMany = std::numeric_limits<std::size_t>::max();

  if (n == "click") {
    const auto pos = b.positional(2, 2);
    Click c{b.coordinate(*pos[0]), b.coordinate(*pos[1])};
    if (const Arg* a = b.keyword("button", {"button", "clicks"})) c.button = b.button(*a);
    if (const Arg* a = b.keyword("clicks", {"button", "clicks"})) {
      c.clicks = b.integer(*a);
      if (c.clicks < 1) b.fail(ParseErrorKind::ArgType, a->span, "clicks must be >= 1");
    }
    return c;
  }
  if (n == "rightClick" || n == "doubleClick") {
    const auto pos = b.positional(2, 2);
    b.keyword("", {});
    Click c{b.coordinate(*pos[0]), b.coordinate(*pos[1])};
    if (n == "rightClick") {
      c.button = MouseButton::Right;
    } else {
      c.clicks = 2;
    }
    return c;
  }
  if (n == "moveTo") {
    // A trailing duration is accepted for compatibility and dropped.
    const auto pos = b.positional(2, 3);
    const Arg* d = b.keyword("duration", {"duration"});
    if (pos.size() == 3) b.number(*pos[2]);
    if (d) b.number(*d);
    return MoveTo{b.coordinate(*pos[0]), b.coordinate(*pos[1])};
  }
  if (n == "dragTo") {
    const auto pos = b.positional(2, 3);
    DragTo d{b.coordinate(*pos[0]), b.coordinate(*pos[1]), 0.0};
    const Arg* kw = b.keyword("duration", {"duration"});
    if (pos.size() == 3 && kw) b.fail(ParseErrorKind::Arity, kw->span, "duration given twice");
    const Arg* dur = pos.size() == 3 ? pos[2] : kw;
    if (dur) {
      d.duration = b.number(*dur);
      if (!(d.duration >= 0.0) || !std::isfinite(d.duration)) {
        b.fail(ParseErrorKind::ArgType, dur->span, "duration must be a finite number >= 0");
      }
    }
    return d;
  }
  if (n == "write") {
    const auto pos = b.positional(1, 1);
    b.keyword("", {});
    return Write{b.string(*pos[0])};
  }
  if (n == "hotkey") {
    const auto pos = b.positional(2, kMany);
    b.keyword("", {});
    Hotkey h;
    for (const Arg* a : pos) {
      std::string k = b.key(*a);
      if (std::find(h.keys.begin(), h.keys.end(), k) != h.keys.end()) {
        b.fail(ParseErrorKind::ArgType, a->span, "duplicate key '" + k + "' in hotkey");
      }
      h.keys.push_back(std::move(k));
    }
    return h;
  }
  if (n == "scroll") {
    const auto pos = b.positional(1, 1);
    b.keyword("", {});
    return Scroll{b.integer(*pos[0])};
  }
  if (n == "mouseDown" || n == "mouseUp") {
    b.positional(0, 0);
    MouseButton button = MouseButton::Left;
    if (const Arg* a = b.keyword("button", {"button"})) button = b.button(*a);
    if (n == "mouseDown") return MouseDown{button};
    return MouseUp{button};
  }
  if (n == "press" || n == "keyDown" || n == "keyUp") {
    const auto pos = b.positional(1, 1);
    b.keyword("", {});
    std::string k = b.key(*pos[0]);
    if (n == "press") return Press{std::move(k)};
    if (n == "keyDown") return KeyDown{std::move(k)};
    return KeyUp{std::move(k)};
  }
  throw ParseError(ParseErrorKind::UnknownAction, call.name_span, line, "unknown action '" + n + "'");
}

std::string_view strip_module_prefix(std::string_view name) {
  constexpr std::string_view kPrefix = "pyautogui.";
  if (name.substr(0, kPrefix.size()) == kPrefix) name.remove_prefix(kPrefix.size());
  return name;
}

bool starts_with_word(std::string_view s, std::string_view word) {
  return s.size() > word.size() && s.substr(0, word.size()) == word &&
         (s[word.size()] == ' ' || s[word.size()] == '\t');
}

std::string quote(std::string_view s) {
  std::string out = "'";
  for (const char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
          constexpr char kHex[] = "0123456789abcdef";
          out += "\\x";
          out += kHex[(static_cast<unsigned char>(c) >> 4) & 0xf];
          out += kHex[static_cast<unsigned char>(c) & 0xf];
        } else {
          out += c;
        }
    }
  }
  out += '\'';
  return out;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, SourceSpan span, std::size_t line, const std::string& message)
    : Error(std::string(error_code(kind)), "line " + std::to_string(line) + ": " + message),
      kind_(kind),
      span_(span),
      line_(line) {}

std::string_view to_string(MouseButton b) {
  switch (b) {
    case MouseButton::Left: return "left";
    case MouseButton::Right: return "right";
    case MouseButton::Middle: return "middle";
  }
  return "left";
}

std::span<const std::string_view> key_table() { return kKeyTable; }
std::span<const std::string_view> action_names() { return kActionNames; }

bool is_known_key(std::string_view key) {
  return std::find(kKeyTable.begin(), kKeyTable.end(), key) != kKeyTable.end();
}

Action parse_action(std::string_view text) {
  Cursor cur(text, 0, 1);
  Call call = cur.call(false);
  cur.skip_ws();
  if (!cur.at_end()) cur.fail_here("unexpected trailing input");
  return build_action(call, 1);
}

ActionScript parse_script(std::string_view text, ScriptMode mode) {
  ActionScript script;
  script.source = std::string(text);
  const bool tolerant = mode == ScriptMode::Preaction;

  std::size_t line_start = 0;
  std::size_t line_no = 1;
  while (line_start <= text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    const std::string_view line = text.substr(line_start, line_end - line_start);

    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first != std::string_view::npos) {
      const std::string_view body = line.substr(first);
      const bool skipped = tolerant && (body.front() == '#' || starts_with_word(body, "import") ||
                                        starts_with_word(body, "from"));
      if (!skipped) {
        Cursor cur(line, line_start, line_no);
        for (;;) {
          cur.skip_ws();
          if (cur.at_end()) break;
          if (cur.peek() == ';') {
            cur.consume(';');
            continue;
          }
          if (tolerant && cur.peek() == '#') break;
          Call call = cur.call(tolerant);
          if (tolerant) call.name = std::string(strip_module_prefix(call.name));
          script.actions.push_back(build_action(call, line_no));
          cur.skip_ws();
          if (cur.at_end()) break;
          if (tolerant && cur.peek() == '#') break;
          if (!cur.consume(';')) cur.fail_here("expected ';' or end of line between statements");
        }
      }
    }
    if (line_end == text.size()) break;
    line_start = line_end + 1;
    ++line_no;
  }
  return script;
}

std::string serialize_action(const Action& action) {
  struct Visitor {
    std::string operator()(const MoveTo& a) const {
      return "moveTo(" + std::to_string(a.x) + ", " + std::to_string(a.y) + ")";
    }
    std::string operator()(const Click& a) const {
      const std::string xy = std::to_string(a.x) + ", " + std::to_string(a.y);
      if (a.button == MouseButton::Left && a.clicks == 1) return "click(" + xy + ")";
      if (a.button == MouseButton::Right && a.clicks == 1) return "rightClick(" + xy + ")";
      if (a.button == MouseButton::Left && a.clicks == 2) return "doubleClick(" + xy + ")";
      std::string out = "click(" + xy;
      if (a.button != MouseButton::Left) out += ", button=" + quote(to_string(a.button));
      if (a.clicks != 1) out += ", clicks=" + std::to_string(a.clicks);
      return out + ")";
    }
    std::string operator()(const Write& a) const { return "write(" + quote(a.text) + ")"; }
    std::string operator()(const Hotkey& a) const {
      std::string out = "hotkey(";
      for (std::size_t i = 0; i < a.keys.size(); ++i) {
        if (i) out += ", ";
        out += quote(a.keys[i]);
      }
      return out + ")";
    }
    std::string operator()(const Scroll& a) const { return "scroll(" + std::to_string(a.amount) + ")"; }
    std::string operator()(const DragTo& a) const {
      std::string out = "dragTo(" + std::to_string(a.x) + ", " + std::to_string(a.y);
      if (a.duration != 0.0) out += ", " + format_number(a.duration);
      return out + ")";
    }
    std::string operator()(const MouseDown& a) const {
      if (a.button == MouseButton::Left) return "mouseDown()";
      return "mouseDown(button=" + quote(to_string(a.button)) + ")";
    }
    std::string operator()(const MouseUp& a) const {
      if (a.button == MouseButton::Left) return "mouseUp()";
      return "mouseUp(button=" + quote(to_string(a.button)) + ")";
    }
    std::string operator()(const Press& a) const { return "press(" + quote(a.key) + ")"; }
    std::string operator()(const KeyDown& a) const { return "keyDown(" + quote(a.key) + ")"; }
    std::string operator()(const KeyUp& a) const { return "keyUp(" + quote(a.key) + ")"; }
  };
  return std::visit(Visitor{}, action);
}

std::string serialize_script(const ActionScript& script) {
  std::string out;
  for (std::size_t i = 0; i < script.actions.size(); ++i) {
    if (i) out += '\n';
    out += serialize_action(script.actions[i]);
  }
  return out;
}

std::optional<Point> target_point(const Action& action) {
  if (const auto* m = std::get_if<MoveTo>(&action)) return Point{m->x, m->y};
  if (const auto* c = std::get_if<Click>(&action)) return Point{c->x, c->y};
  if (const auto* d = std::get_if<DragTo>(&action)) return Point{d->x, d->y};
  return std::nullopt;
}

std::vector<BoundsViolation> validate_bounds(const ActionScript& script, ScreenSize screen) {
  std::vector<BoundsViolation> out;
  for (std::size_t i = 0; i < script.actions.size(); ++i) {
    const auto p = target_point(script.actions[i]);
    if (!p) continue;
    if (p->x < 0 || p->y < 0 || p->x >= screen.w || p->y >= screen.h) out.push_back({i, p->x, p->y});
  }
  return out;
}

}  // namespace deskagent::dsl
