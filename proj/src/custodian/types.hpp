#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "custodian/error.hpp"

namespace custodian {

// 128-bit opaque identifier rendered as 32 lowercase hex characters.
template <class Tag>
class Id {
 public:
  Id() = default;

  static Id parse(std::string_view text) {
    if (!valid(text)) {
      fail(ErrorCode::InvalidArgument,
           std::string(Tag::kName) + " must be 32 lowercase hex characters");
    }
    return Id(std::string(text));
  }

  static std::optional<Id> try_parse(std::string_view text) {
    if (!valid(text)) return std::nullopt;
    return Id(std::string(text));
  }

  static Id generate();

  static bool valid(std::string_view text) noexcept;

  [[nodiscard]] const std::string& str() const noexcept { return value_; }
  [[nodiscard]] bool empty() const noexcept { return value_.empty(); }

  auto operator<=>(const Id&) const = default;

 private:
  explicit Id(std::string v) : value_(std::move(v)) {}
  std::string value_;
};

struct CaseTag { static constexpr const char* kName = "case id"; };
struct EvidenceTag { static constexpr const char* kName = "evidence id"; };
struct PrincipalTag { static constexpr const char* kName = "principal id"; };
struct NoteTag { static constexpr const char* kName = "note id"; };
struct InvocationTag { static constexpr const char* kName = "invocation id"; };

using CaseId = Id<CaseTag>;
using EvidenceId = Id<EvidenceTag>;
using PrincipalId = Id<PrincipalTag>;
using NoteId = Id<NoteTag>;
using InvocationId = Id<InvocationTag>;

std::string random_id_hex();  // 16 bytes from the OS CSPRNG, hex-encoded
bool is_id_text(std::string_view text) noexcept;

template <class Tag>
Id<Tag> Id<Tag>::generate() {
  return Id(random_id_hex());
}

template <class Tag>
bool Id<Tag>::valid(std::string_view text) noexcept {
  return is_id_text(text);
}

enum class DigestAlgorithm { Sha1, Sha256 };

struct DigestValue {
  DigestAlgorithm algorithm = DigestAlgorithm::Sha1;
  std::string hex;

  static DigestValue sha1(std::string hex);
  static DigestValue sha256(std::string hex);

  // "sha1:<hex>" / "sha256:<hex>"
  [[nodiscard]] std::string tagged() const;
  static std::optional<DigestValue> from_tagged(std::string_view text);

  bool operator==(const DigestValue&) const = default;
};

std::string_view digest_algorithm_name(DigestAlgorithm a) noexcept;

// Milliseconds since the Unix epoch, UTC.
struct Timestamp {
  std::int64_t ms = 0;

  [[nodiscard]] std::string iso8601() const;  // 2026-10-14T04:17:00.123Z
  static std::optional<Timestamp> parse(std::string_view iso);

  auto operator<=>(const Timestamp&) const = default;
};

}  // namespace custodian

template <class Tag>
struct std::hash<custodian::Id<Tag>> {
  std::size_t operator()(const custodian::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
