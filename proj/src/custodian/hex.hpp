#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace custodian {

std::string to_hex(std::span<const std::uint8_t> bytes);

// Accepts upper- or lower-case digits; nullopt on odd length or a non-hex char.
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view text);

bool is_lower_hex(std::string_view text) noexcept;

inline std::span<const std::uint8_t> as_bytes(std::string_view text) noexcept {
  return {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()};
}

}  // namespace custodian
