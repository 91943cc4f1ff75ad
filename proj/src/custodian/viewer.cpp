#include "custodian/viewer.hpp"

#include <array>
#include <cstdio>

namespace custodian::viewer {

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Ascii: return "ASCII";
    case Mode::Unicode: return "UNICODE";
    case Mode::Hex: return "HEX";
  }
  return "ASCII";
}

std::string_view to_string(Encoding e) noexcept {
  switch (e) {
    case Encoding::Utf8: return "UTF8";
    case Encoding::Utf16Le: return "UTF16LE";
    case Encoding::Utf16Be: return "UTF16BE";
  }
  return "UTF8";
}

std::optional<Mode> parse_mode(std::string_view s) noexcept {
  if (s == "ASCII" || s == "ascii") return Mode::Ascii;
  if (s == "UNICODE" || s == "unicode") return Mode::Unicode;
  if (s == "HEX" || s == "hex") return Mode::Hex;
  return std::nullopt;
}

std::optional<Encoding> parse_encoding(std::string_view s) noexcept {
  if (s == "UTF8" || s == "utf8" || s == "UTF-8" || s == "utf-8") return Encoding::Utf8;
  if (s == "UTF16LE" || s == "utf16le" || s == "UTF-16LE") return Encoding::Utf16Le;
  if (s == "UTF16BE" || s == "utf16be" || s == "UTF-16BE") return Encoding::Utf16Be;
  return std::nullopt;
}

namespace {

char gutter_char(std::uint8_t b) noexcept { return (b >= 0x20 && b <= 0x7e) ? static_cast<char>(b) : '.'; }

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

constexpr char32_t kReplacement = 0xfffd;

UnicodeText decode_utf8(std::span<const std::uint8_t> b) {
  UnicodeText r;
  r.text.reserve(b.size());
  std::size_t i = 0;
  const std::size_t n = b.size();
  auto replace = [&r] {
    append_utf8(r.text, kReplacement);
    ++r.replacements;
  };
  while (i < n) {
    const std::uint8_t c = b[i];
    if (c < 0x80) {
      r.text.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    int need = 0;
    std::uint8_t lo = 0x80, hi = 0xbf;  // valid range for the first continuation byte
    if (c >= 0xc2 && c <= 0xdf) {
      need = 1;
    } else if (c == 0xe0) {
      need = 2, lo = 0xa0;
    } else if ((c >= 0xe1 && c <= 0xec) || c == 0xee || c == 0xef) {
      need = 2;
    } else if (c == 0xed) {
      need = 2, hi = 0x9f;
    } else if (c == 0xf0) {
      need = 3, lo = 0x90;
    } else if (c >= 0xf1 && c <= 0xf3) {
      need = 3;
    } else if (c == 0xf4) {
      need = 3, hi = 0x8f;
    } else {
      replace();
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    int got = 0;
    bool ok = true;
    while (got < need) {
      if (j >= n) {
        ok = false;
        break;
      }
      const std::uint8_t cc = b[j];
      const std::uint8_t l = got == 0 ? lo : 0x80;
      const std::uint8_t h = got == 0 ? hi : 0xbf;
      if (cc < l || cc > h) {
        ok = false;
        break;
      }
      ++j;
      ++got;
    }
    if (!ok) {
      // maximal subpart [i, j) becomes a single replacement
      replace();
      i = j;
      continue;
    }
    r.text.append(reinterpret_cast<const char*>(&b[i]), j - i);
    i = j;
  }
  return r;
}

UnicodeText decode_utf16(std::span<const std::uint8_t> b, bool little_endian) {
  UnicodeText r;
  auto unit = [&](std::size_t k) -> char16_t {
    return little_endian ? static_cast<char16_t>(b[k] | (b[k + 1] << 8))
                         : static_cast<char16_t>((b[k] << 8) | b[k + 1]);
  };
  auto replace = [&r] {
    append_utf8(r.text, kReplacement);
    ++r.replacements;
  };
  std::size_t i = 0;
  const std::size_t pairs_end = b.size() & ~std::size_t{1};
  while (i < pairs_end) {
    char16_t u = unit(i);
    if (u >= 0xd800 && u <= 0xdbff) {
      if (i + 4 <= pairs_end) {
        char16_t v = unit(i + 2);
        if (v >= 0xdc00 && v <= 0xdfff) {
          append_utf8(r.text, 0x10000 + ((static_cast<char32_t>(u) - 0xd800) << 10) + (v - 0xdc00));
          i += 4;
          continue;
        }
      }
      replace();
      i += 2;
    } else if (u >= 0xdc00 && u <= 0xdfff) {
      replace();
      i += 2;
    } else {
      append_utf8(r.text, u);
      i += 2;
    }
  }
  if (b.size() % 2 != 0) replace();  // dangling odd byte
  return r;
}

}  // namespace

std::string render_ascii(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (auto b : bytes) {
    out.push_back((b == 0x0a || b == 0x0d) ? static_cast<char>(b) : gutter_char(b));
  }
  return out;
}

UnicodeText render_unicode(std::span<const std::uint8_t> bytes, Encoding encoding) {
  switch (encoding) {
    case Encoding::Utf8: return decode_utf8(bytes);
    case Encoding::Utf16Le: return decode_utf16(bytes, true);
    case Encoding::Utf16Be: return decode_utf16(bytes, false);
  }
  return decode_utf8(bytes);
}

std::string render_hex(std::span<const std::uint8_t> bytes, std::uint64_t base_offset) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  const std::size_t rows = (bytes.size() + 15) / 16;
  out.reserve(rows * 78);
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t start = row * 16;
    const std::size_t count = std::min<std::size_t>(16, bytes.size() - start);
    char offset[24];
    std::snprintf(offset, sizeof offset, "%08llx",
                  static_cast<unsigned long long>(base_offset + start));
    out += offset;
    out += "  ";
    // 48 columns of hex: "xx xx xx xx xx xx xx xx  xx xx xx xx xx xx xx xx"
    for (std::size_t k = 0; k < 16; ++k) {
      if (k > 0) out += (k == 8) ? "  " : " ";
      if (k < count) {
        const std::uint8_t b = bytes[start + k];
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xf]);
      } else {
        out += "  ";
      }
    }
    out += "  |";
    for (std::size_t k = 0; k < count; ++k) out.push_back(gutter_char(bytes[start + k]));
    out += "|\n";
  }
  return out;
}

std::string_view detect_media_type(std::span<const std::uint8_t> h) noexcept {
  auto starts = [&h](std::initializer_list<std::uint8_t> sig) {
    if (h.size() < sig.size()) return false;
    std::size_t i = 0;
    for (auto s : sig) {
      if (h[i++] != s) return false;
    }
    return true;
  };
  if (starts({0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a})) return "image/png";
  if (starts({0xff, 0xd8, 0xff})) return "image/jpeg";
  if (starts({'G', 'I', 'F', '8'})) return "image/gif";
  if (starts({'B', 'M'})) return "image/bmp";
  if (starts({'R', 'I', 'F', 'F'}) && h.size() >= 12 && h[8] == 'W' && h[9] == 'E' && h[10] == 'B' && h[11] == 'P') {
    return "image/webp";
  }
  if (starts({'%', 'P', 'D', 'F', '-'})) return "application/pdf";
  return "application/octet-stream";
}

}  // namespace custodian::viewer
