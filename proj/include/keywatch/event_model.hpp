#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keywatch/error.hpp"

namespace keywatch {

enum class EventKind { key_press, key_release, mouse_move, mouse_click };
enum class MouseButton { left, right, middle };

std::string_view to_string(EventKind kind);
std::string_view to_string(MouseButton button);

/// One captured keystroke or mouse action. Which optional fields are set is
/// dictated by `kind`; use the factories, or `validate()` after building by hand.
struct InputEvent {
  std::uint64_t timestamp_ms = 0;
  EventKind kind = EventKind::key_press;
  std::optional<std::string> key;
  std::optional<std::uint32_t> x;
  std::optional<std::uint32_t> y;
  std::optional<MouseButton> button;

  static InputEvent key_press(std::uint64_t ts, std::string key);
  static InputEvent key_release(std::uint64_t ts, std::string key);
  static InputEvent mouse_move(std::uint64_t ts, std::uint32_t x, std::uint32_t y);
  static InputEvent mouse_click(std::uint64_t ts, std::uint32_t x, std::uint32_t y,
                                MouseButton button);

  /// Throws std::invalid_argument if field presence does not match `kind`
  /// or the key symbol is outside the key alphabet.
  void validate() const;

  friend bool operator==(const InputEvent&, const InputEvent&) = default;
};

struct EventScript {
  std::vector<InputEvent> events;
  std::string source_label;
};

/// Printable ASCII other than space, or one of ENTER, SPACE, TAB, BACKSPACE.
bool is_valid_key_symbol(std::string_view key);

/// Grammar, one event per line:
///   <timestamp_ms> key_press|key_release <key>
///   <timestamp_ms> mouse_move <x> <y>
///   <timestamp_ms> mouse_click <x> <y> left|right|middle
/// A line whose first non-blank character is '#' is a comment. Throws
/// ParseError naming the first bad line; nothing is returned on failure.
EventScript parse_event_script(std::string_view text, std::string source_label = {});

/// Canonical form: single spaces, LF endings, no comments.
std::string serialize_events(const EventScript& script);

/// Same (seed, count) always yields the same script.
EventScript generate_synthetic(std::uint64_t seed, std::size_t count);

/// Thrown by capture_interactive when the stream goes bad; `partial` holds
/// whatever was captured before the failure.
class CaptureError : public Error {
 public:
  CaptureError(EventScript partial, const std::string& what)
      : Error(Category::io, what), partial_(std::move(partial)) {}

  const EventScript& partial() const noexcept { return partial_; }

 private:
  EventScript partial_;
};

/// Milliseconds since capture started. Defaults to a steady clock.
using SessionClock = std::function<std::uint64_t()>;

/// Each character becomes a key_press, each line ends with ENTER. Space and
/// tab map to SPACE/TAB, 0x08 to BACKSPACE; bytes with no key symbol
/// (control characters, non-ASCII) are dropped.
EventScript capture_interactive(std::istream& input, SessionClock clock = {},
                                std::string source_label = "stdin");

}  // namespace keywatch
