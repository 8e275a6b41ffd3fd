#include "keywatch/event_model.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <random>
#include <stdexcept>

namespace keywatch {

namespace {

constexpr std::array<std::string_view, 4> kNamedKeys = {"ENTER", "SPACE", "TAB", "BACKSPACE"};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) break;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <typename Int>
std::optional<Int> parse_unsigned(std::string_view field) {
  if (field.empty()) return std::nullopt;
  for (char c : field) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  Int value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

std::optional<EventKind> parse_kind(std::string_view s) {
  if (s == "key_press") return EventKind::key_press;
  if (s == "key_release") return EventKind::key_release;
  if (s == "mouse_move") return EventKind::mouse_move;
  if (s == "mouse_click") return EventKind::mouse_click;
  return std::nullopt;
}

std::optional<MouseButton> parse_button(std::string_view s) {
  if (s == "left") return MouseButton::left;
  if (s == "right") return MouseButton::right;
  if (s == "middle") return MouseButton::middle;
  return std::nullopt;
}

bool is_key_kind(EventKind kind) {
  return kind == EventKind::key_press || kind == EventKind::key_release;
}

InputEvent parse_line(std::size_t line_no, const std::vector<std::string_view>& f) {
  auto ts = parse_unsigned<std::uint64_t>(f[0]);
  if (!ts) throw ParseError(line_no, "timestamp '" + std::string(f[0]) + "' is not a non-negative integer");
  if (f.size() < 2) throw ParseError(line_no, "missing event kind");
  auto kind = parse_kind(f[1]);
  if (!kind) throw ParseError(line_no, "unknown event kind '" + std::string(f[1]) + "'");

  const std::size_t want = is_key_kind(*kind) ? 3 : (*kind == EventKind::mouse_move ? 4 : 5);
  if (f.size() < want) throw ParseError(line_no, "missing arguments for " + std::string(f[1]));
  if (f.size() > want) throw ParseError(line_no, "too many arguments for " + std::string(f[1]));

  if (is_key_kind(*kind)) {
    if (!is_valid_key_symbol(f[2])) throw ParseError(line_no, "unknown key '" + std::string(f[2]) + "'");
    return *kind == EventKind::key_press ? InputEvent::key_press(*ts, std::string(f[2]))
                                         : InputEvent::key_release(*ts, std::string(f[2]));
  }
  auto x = parse_unsigned<std::uint32_t>(f[2]);
  auto y = parse_unsigned<std::uint32_t>(f[3]);
  if (!x || !y) throw ParseError(line_no, "coordinates must be non-negative integers");
  if (*kind == EventKind::mouse_move) return InputEvent::mouse_move(*ts, *x, *y);
  auto button = parse_button(f[4]);
  if (!button) throw ParseError(line_no, "unknown mouse button '" + std::string(f[4]) + "'");
  return InputEvent::mouse_click(*ts, *x, *y, *button);
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::key_press: return "key_press";
    case EventKind::key_release: return "key_release";
    case EventKind::mouse_move: return "mouse_move";
    case EventKind::mouse_click: return "mouse_click";
  }
  return "?";
}

std::string_view to_string(MouseButton button) {
  switch (button) {
    case MouseButton::left: return "left";
    case MouseButton::right: return "right";
    case MouseButton::middle: return "middle";
  }
  return "?";
}

bool is_valid_key_symbol(std::string_view key) {
  if (key.size() == 1) return key[0] > 0x20 && key[0] < 0x7f;
  for (auto named : kNamedKeys) {
    if (key == named) return true;
  }
  return false;
}

InputEvent InputEvent::key_press(std::uint64_t ts, std::string key) {
  InputEvent e;
  e.timestamp_ms = ts;
  e.kind = EventKind::key_press;
  e.key = std::move(key);
  return e;
}

InputEvent InputEvent::key_release(std::uint64_t ts, std::string key) {
  InputEvent e = key_press(ts, std::move(key));
  e.kind = EventKind::key_release;
  return e;
}

InputEvent InputEvent::mouse_move(std::uint64_t ts, std::uint32_t x, std::uint32_t y) {
  InputEvent e;
  e.timestamp_ms = ts;
  e.kind = EventKind::mouse_move;
  e.x = x;
  e.y = y;
  return e;
}

InputEvent InputEvent::mouse_click(std::uint64_t ts, std::uint32_t x, std::uint32_t y,
                                   MouseButton button) {
  InputEvent e = mouse_move(ts, x, y);
  e.kind = EventKind::mouse_click;
  e.button = button;
  return e;
}

void InputEvent::validate() const {
  const bool want_key = is_key_kind(kind);
  const bool want_xy = !want_key;
  const bool want_button = kind == EventKind::mouse_click;
  if (key.has_value() != want_key || x.has_value() != want_xy || y.has_value() != want_xy ||
      button.has_value() != want_button) {
    throw std::invalid_argument("field presence does not match event kind " +
                                std::string(to_string(kind)));
  }
  if (key && !is_valid_key_symbol(*key)) throw std::invalid_argument("invalid key symbol '" + *key + "'");
}

EventScript parse_event_script(std::string_view text, std::string source_label) {
  EventScript script;
  script.source_label = std::move(source_label);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto fields = split_fields(line);
    if (fields.empty() || fields[0].front() == '#') continue;

    InputEvent event = parse_line(line_no, fields);
    if (!script.events.empty() && event.timestamp_ms < script.events.back().timestamp_ms) {
      throw ParseError(line_no, "timestamp " + std::to_string(event.timestamp_ms) +
                                    " decreases (previous " +
                                    std::to_string(script.events.back().timestamp_ms) + ")");
    }
    script.events.push_back(std::move(event));
  }
  return script;
}

std::string serialize_events(const EventScript& script) {
  std::string out;
  out.reserve(script.events.size() * 24);
  for (const auto& e : script.events) {
    out += std::to_string(e.timestamp_ms);
    out += ' ';
    out += to_string(e.kind);
    if (e.key) {
      out += ' ';
      out += *e.key;
    }
    if (e.x) {
      out += ' ';
      out += std::to_string(*e.x);
      out += ' ';
      out += std::to_string(*e.y);
    }
    if (e.button) {
      out += ' ';
      out += to_string(*e.button);
    }
    out += '\n';
  }
  return out;
}

EventScript generate_synthetic(std::uint64_t seed, std::size_t count) {
  // Raw engine output only: distributions are implementation-defined, the
  // engine sequence is not.
  std::mt19937_64 rng(seed);
  static constexpr std::string_view kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;:!?@#-_/";

  EventScript script;
  script.source_label = "synthetic(" + std::to_string(seed) + ")";
  script.events.reserve(count);
  std::uint64_t ts = 0;
  for (std::size_t i = 0; i < count; ++i) {
    ts += 1 + rng() % 120;
    const auto kind = static_cast<EventKind>(rng() % 4);
    if (is_key_kind(kind)) {
      const std::uint64_t pick = rng() % (kAlphabet.size() + kNamedKeys.size());
      std::string key = pick < kAlphabet.size() ? std::string(1, kAlphabet[pick])
                                                : std::string(kNamedKeys[pick - kAlphabet.size()]);
      script.events.push_back(kind == EventKind::key_press ? InputEvent::key_press(ts, std::move(key))
                                                           : InputEvent::key_release(ts, std::move(key)));
    } else {
      const auto x = static_cast<std::uint32_t>(rng() % 1920);
      const auto y = static_cast<std::uint32_t>(rng() % 1080);
      if (kind == EventKind::mouse_move) {
        script.events.push_back(InputEvent::mouse_move(ts, x, y));
      } else {
        script.events.push_back(InputEvent::mouse_click(ts, x, y, static_cast<MouseButton>(rng() % 3)));
      }
    }
  }
  return script;
}

EventScript capture_interactive(std::istream& input, SessionClock clock, std::string source_label) {
  if (!clock) {
    const auto start = std::chrono::steady_clock::now();
    clock = [start] {
      return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                            std::chrono::steady_clock::now() - start)
                                            .count());
    };
  }

  EventScript script;
  script.source_label = std::move(source_label);
  std::uint64_t last = 0;
  auto emit = [&](std::string key) {
    // Clamp so a misbehaving clock cannot break the ordering invariant.
    last = std::max(last, clock());
    script.events.push_back(InputEvent::key_press(last, std::move(key)));
  };

  std::string line;
  while (std::getline(input, line)) {
    for (char c : line) {
      if (c == ' ') {
        emit("SPACE");
      } else if (c == '\t') {
        emit("TAB");
      } else if (c == '\b') {
        emit("BACKSPACE");
      } else if (c > 0x20 && c < 0x7f) {
        emit(std::string(1, c));
      }
    }
    emit("ENTER");
  }
  if (input.bad()) throw CaptureError(std::move(script), "input stream read failure");
  return script;
}

}  // namespace keywatch
