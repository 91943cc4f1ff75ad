#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace custodian::viewer {

enum class Mode { Ascii, Unicode, Hex };
enum class Encoding { Utf8, Utf16Le, Utf16Be };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(Encoding e) noexcept;
std::optional<Mode> parse_mode(std::string_view s) noexcept;
std::optional<Encoding> parse_encoding(std::string_view s) noexcept;

inline constexpr std::size_t kMaxWindow = 1u << 20;

// 0x20-0x7E verbatim, LF and CR preserved, everything else '.'.
std::string render_ascii(std::span<const std::uint8_t> bytes);

struct UnicodeText {
  std::string text;  // UTF-8
  std::size_t replacements = 0;
};

// Decodes with the given encoding; every maximal ill-formed subsequence
// becomes one U+FFFD.
UnicodeText render_unicode(std::span<const std::uint8_t> bytes, Encoding encoding);

// Canonical hexdump rows, one per 16 bytes, each terminated by LF:
//   oooooooo  xx xx xx xx xx xx xx xx  xx xx xx xx xx xx xx xx  |................|
// The offset column starts at base_offset. A short final row is padded so the
// gutter lines up.
std::string render_hex(std::span<const std::uint8_t> bytes, std::uint64_t base_offset);

// Best-effort media type from magic numbers; application/octet-stream otherwise.
std::string_view detect_media_type(std::span<const std::uint8_t> head) noexcept;

}  // namespace custodian::viewer
