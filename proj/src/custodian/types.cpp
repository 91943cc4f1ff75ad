#include "custodian/types.hpp"

#include <openssl/rand.h>

#include <array>
#include <cstdio>
#include <ctime>

#include "custodian/hex.hpp"

namespace custodian {

std::string random_id_hex() {
  std::array<std::uint8_t, 16> raw{};
  if (RAND_bytes(raw.data(), static_cast<int>(raw.size())) != 1) {
    fail(ErrorCode::Internal, "random generator unavailable");
  }
  return to_hex(raw);
}

bool is_id_text(std::string_view text) noexcept {
  return text.size() == 32 && is_lower_hex(text);
}

DigestValue DigestValue::sha1(std::string hex) {
  if (hex.size() != 40 || !is_lower_hex(hex)) {
    fail(ErrorCode::InvalidArgument, "sha1 digest must be 40 lowercase hex");
  }
  return {DigestAlgorithm::Sha1, std::move(hex)};
}

DigestValue DigestValue::sha256(std::string hex) {
  if (hex.size() != 64 || !is_lower_hex(hex)) {
    fail(ErrorCode::InvalidArgument, "sha256 digest must be 64 lowercase hex");
  }
  return {DigestAlgorithm::Sha256, std::move(hex)};
}

std::string_view digest_algorithm_name(DigestAlgorithm a) noexcept {
  return a == DigestAlgorithm::Sha1 ? "sha1" : "sha256";
}

std::string DigestValue::tagged() const {
  return std::string(digest_algorithm_name(algorithm)) + ":" + hex;
}

std::optional<DigestValue> DigestValue::from_tagged(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto algo = text.substr(0, colon);
  std::string hex(text.substr(colon + 1));
  if (!is_lower_hex(hex)) return std::nullopt;
  if (algo == "sha1" && hex.size() == 40) return DigestValue{DigestAlgorithm::Sha1, hex};
  if (algo == "sha256" && hex.size() == 64) return DigestValue{DigestAlgorithm::Sha256, hex};
  return std::nullopt;
}

std::string Timestamp::iso8601() const {
  std::int64_t secs = ms / 1000;
  int millis = static_cast<int>(ms % 1000);
  if (millis < 0) {
    millis += 1000;
    --secs;
  }
  std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

std::optional<Timestamp> Timestamp::parse(std::string_view iso) {
  if (iso.size() != 24 || iso[23] != 'Z') return std::nullopt;
  std::tm tm{};
  int millis = 0;
  std::string s(iso);
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon,
                  &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &millis) != 7) {
    return std::nullopt;
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  std::time_t secs = timegm(&tm);
  return Timestamp{static_cast<std::int64_t>(secs) * 1000 + millis};
}

}  // namespace custodian
