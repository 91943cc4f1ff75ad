#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "custodian/types.hpp"

namespace custodian {

// ---- access control -------------------------------------------------------

enum class Role { Administrator, Investigator, Auditor };
enum class Right { View = 1, Read = 2, Write = 3 };  // ordered: Write => Read => View
enum class Category { Case, Evidence, ReportInfo };
enum class Effect { Allow, Deny };
enum class Decision { Allow, Deny };

struct Principal {
  PrincipalId id;
  std::string username;
  std::string display_name;
  Role role = Role::Investigator;
  Timestamp created_at;
};

struct ObjectRef {
  Category category = Category::Case;
  std::string id;  // case id for CASE and REPORT_INFO, evidence id for EVIDENCE

  bool operator==(const ObjectRef&) const = default;
};

struct AccessControlEntry {
  PrincipalId principal;
  ObjectRef object;
  Right right = Right::View;
  Effect effect = Effect::Allow;
};

// nullopt means NONE.
using MaybeRight = std::optional<Right>;

struct DefaultRightsPolicy {
  // indexed [role][category]
  MaybeRight role_defaults[3][3]{};
  MaybeRight category_defaults[3]{};

  [[nodiscard]] MaybeRight role_default(Role r, Category c) const {
    return role_defaults[static_cast<int>(r)][static_cast<int>(c)];
  }
  [[nodiscard]] MaybeRight category_default(Category c) const {
    return category_defaults[static_cast<int>(c)];
  }
};

struct SessionToken {
  std::string token;
  PrincipalId principal;
  Timestamp expires_at;
};

// ---- cases ----------------------------------------------------------------

enum class CaseStatus { Open, Closed };

struct Case {
  CaseId id;
  std::string details;
  std::string description;
  Timestamp created_at;
  Timestamp modified_at;
  std::vector<PrincipalId> investigators;
  CaseStatus status = CaseStatus::Open;
};

enum class ReportSection { ExecutiveSummary, Introduction, Conclusion };

struct ReportSections {
  std::string executive_summary;
  std::string introduction;
  std::string conclusion;
};

struct NoteTarget {
  std::optional<EvidenceId> evidence;    // set for evidence notes
  std::optional<ReportSection> section;  // set for report-section notes
};

struct Note {
  NoteId id;
  CaseId case_id;
  NoteTarget target;
  PrincipalId author;
  Timestamp created_at;
  std::string body;
};

// ---- evidence -------------------------------------------------------------

enum class Relation { ExtractedFrom, CloneOf, ProducedByTool };
enum class EvidenceStatus { Intact, Corrupt };

struct ParentLink {
  EvidenceId parent;
  Relation relation = Relation::CloneOf;
  std::uint64_t offset = 0;  // EXTRACTED_FROM only
  std::uint64_t length = 0;  // EXTRACTED_FROM only
};

struct EvidenceItem {
  EvidenceId id;
  CaseId case_id;
  std::string display_name;
  std::string source_description;
  std::uint64_t size_bytes = 0;
  DigestValue sha1;
  DigestValue sha256;
  Timestamp acquired_at;
  PrincipalId acquired_by;
  std::optional<ParentLink> parent;
  EvidenceStatus status = EvidenceStatus::Intact;
};

// ---- ledger ---------------------------------------------------------------

enum class EventKind {
  Acquire,
  Import,
  Verify,
  Clone,
  Extract,
  ToolRun,
  Note,
  Report,
  CorruptionDetected,
  CaseCreate,
  AclChange,
  Auth,
  CaseClose,
};

struct CustodyEvent {
  std::uint64_t seq = 0;
  Timestamp timestamp;
  std::optional<PrincipalId> principal;
  std::optional<CaseId> case_id;
  std::optional<EvidenceId> evidence_id;
  // Second evidence item touched by a derivation (source of a clone/extract, target of a tool run)
  std::optional<EvidenceId> related_evidence_id;
  EventKind kind = EventKind::Auth;
  std::string description;
  std::optional<DigestValue> pre_digest;
  std::optional<DigestValue> post_digest;
  std::optional<std::uint64_t> caused_by_seq;
  std::array<std::uint8_t, 32> chain_hash{};
};

// Event fields supplied by the caller; seq, timestamp and chain_hash are
// assigned at append time.
struct EventDraft {
  std::optional<PrincipalId> principal;
  std::optional<CaseId> case_id;
  std::optional<EvidenceId> evidence_id;
  std::optional<EvidenceId> related_evidence_id;
  EventKind kind = EventKind::Auth;
  std::string description;
  std::optional<DigestValue> pre_digest;
  std::optional<DigestValue> post_digest;
  std::optional<std::uint64_t> caused_by_seq;
};

// ---- string forms (stable; used in storage, JSON and the canonical event encoding)

std::string_view to_string(Role v) noexcept;
std::string_view to_string(Right v) noexcept;
std::string_view to_string(Category v) noexcept;
std::string_view to_string(Effect v) noexcept;
std::string_view to_string(Decision v) noexcept;
std::string_view to_string(CaseStatus v) noexcept;
std::string_view to_string(ReportSection v) noexcept;
std::string_view to_string(Relation v) noexcept;
std::string_view to_string(EvidenceStatus v) noexcept;
std::string_view to_string(EventKind v) noexcept;

// parse_* throw Error(InvalidArgument) on unknown names.
Role parse_role(std::string_view s);
Right parse_right(std::string_view s);
Category parse_category(std::string_view s);
Effect parse_effect(std::string_view s);
CaseStatus parse_case_status(std::string_view s);
ReportSection parse_report_section(std::string_view s);
Relation parse_relation(std::string_view s);
EvidenceStatus parse_evidence_status(std::string_view s);
EventKind parse_event_kind(std::string_view s);

}  // namespace custodian
