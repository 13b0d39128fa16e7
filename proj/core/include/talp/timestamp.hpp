#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace talp {

using Instant = std::chrono::sys_time<std::chrono::nanoseconds>;

/// An ISO 8601 timestamp with a mandatory UTC offset ("Z" or "+hh:mm").
/// Keeps the original text for verbatim round-trips; ordering and equality
/// of instants go through `instant()`.
class Timestamp {
 public:
  Timestamp() = default;

  /// Returns nullopt when `text` is not a complete date-time with offset.
  static std::optional<Timestamp> parse(std::string_view text);

  /// Canonical "YYYY-MM-DDTHH:MM:SS[.fffffffff]Z" text for `instant`.
  static Timestamp from_instant(Instant instant);

  const std::string& text() const noexcept { return text_; }
  Instant instant() const noexcept { return instant_; }

  friend bool operator==(const Timestamp&, const Timestamp&) = default;

 private:
  Timestamp(std::string text, Instant instant) : text_(std::move(text)), instant_(instant) {}

  std::string text_;
  Instant instant_{};
};

}  // namespace talp
