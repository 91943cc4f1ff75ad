#include "custodian/model.hpp"

#include <array>
#include <utility>

namespace custodian {

namespace {

template <class E, std::size_t N>
using Names = std::array<std::pair<E, std::string_view>, N>;

constexpr Names<Role, 3> kRoles{{{Role::Administrator, "ADMINISTRATOR"},
                                 {Role::Investigator, "INVESTIGATOR"},
                                 {Role::Auditor, "AUDITOR"}}};
constexpr Names<Right, 3> kRights{{{Right::View, "VIEW"}, {Right::Read, "READ"}, {Right::Write, "WRITE"}}};
constexpr Names<Category, 3> kCategories{{{Category::Case, "CASE"},
                                          {Category::Evidence, "EVIDENCE"},
                                          {Category::ReportInfo, "REPORT_INFO"}}};
constexpr Names<Effect, 2> kEffects{{{Effect::Allow, "ALLOW"}, {Effect::Deny, "DENY"}}};
constexpr Names<Decision, 2> kDecisions{{{Decision::Allow, "ALLOW"}, {Decision::Deny, "DENY"}}};
constexpr Names<CaseStatus, 2> kCaseStatus{{{CaseStatus::Open, "OPEN"}, {CaseStatus::Closed, "CLOSED"}}};
constexpr Names<ReportSection, 3> kSections{{{ReportSection::ExecutiveSummary, "executive_summary"},
                                             {ReportSection::Introduction, "introduction"},
                                             {ReportSection::Conclusion, "conclusion"}}};
constexpr Names<Relation, 3> kRelations{{{Relation::ExtractedFrom, "EXTRACTED_FROM"},
                                         {Relation::CloneOf, "CLONE_OF"},
                                         {Relation::ProducedByTool, "PRODUCED_BY_TOOL"}}};
constexpr Names<EvidenceStatus, 2> kEvidenceStatus{
    {{EvidenceStatus::Intact, "INTACT"}, {EvidenceStatus::Corrupt, "CORRUPT"}}};
constexpr Names<EventKind, 13> kKinds{{{EventKind::Acquire, "ACQUIRE"},
                                       {EventKind::Import, "IMPORT"},
                                       {EventKind::Verify, "VERIFY"},
                                       {EventKind::Clone, "CLONE"},
                                       {EventKind::Extract, "EXTRACT"},
                                       {EventKind::ToolRun, "TOOL_RUN"},
                                       {EventKind::Note, "NOTE"},
                                       {EventKind::Report, "REPORT"},
                                       {EventKind::CorruptionDetected, "CORRUPTION_DETECTED"},
                                       {EventKind::CaseCreate, "CASE_CREATE"},
                                       {EventKind::AclChange, "ACL_CHANGE"},
                                       {EventKind::Auth, "AUTH"},
                                       {EventKind::CaseClose, "CASE_CLOSE"}}};

template <class E, std::size_t N>
std::string_view name_of(const Names<E, N>& table, E v) noexcept {
  for (const auto& [e, n] : table) {
    if (e == v) return n;
  }
  return "?";
}

template <class E, std::size_t N>
E parse_of(const Names<E, N>& table, std::string_view s, const char* what) {
  for (const auto& [e, n] : table) {
    if (n == s) return e;
  }
  fail(ErrorCode::InvalidArgument, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Role v) noexcept { return name_of(kRoles, v); }
std::string_view to_string(Right v) noexcept { return name_of(kRights, v); }
std::string_view to_string(Category v) noexcept { return name_of(kCategories, v); }
std::string_view to_string(Effect v) noexcept { return name_of(kEffects, v); }
std::string_view to_string(Decision v) noexcept { return name_of(kDecisions, v); }
std::string_view to_string(CaseStatus v) noexcept { return name_of(kCaseStatus, v); }
std::string_view to_string(ReportSection v) noexcept { return name_of(kSections, v); }
std::string_view to_string(Relation v) noexcept { return name_of(kRelations, v); }
std::string_view to_string(EvidenceStatus v) noexcept { return name_of(kEvidenceStatus, v); }
std::string_view to_string(EventKind v) noexcept { return name_of(kKinds, v); }

Role parse_role(std::string_view s) { return parse_of(kRoles, s, "role"); }
Right parse_right(std::string_view s) { return parse_of(kRights, s, "right"); }
Category parse_category(std::string_view s) { return parse_of(kCategories, s, "category"); }
Effect parse_effect(std::string_view s) { return parse_of(kEffects, s, "effect"); }
CaseStatus parse_case_status(std::string_view s) { return parse_of(kCaseStatus, s, "case status"); }
ReportSection parse_report_section(std::string_view s) { return parse_of(kSections, s, "report section"); }
Relation parse_relation(std::string_view s) { return parse_of(kRelations, s, "relation"); }
EvidenceStatus parse_evidence_status(std::string_view s) {
  return parse_of(kEvidenceStatus, s, "evidence status");
}
EventKind parse_event_kind(std::string_view s) { return parse_of(kKinds, s, "event kind"); }

}  // namespace custodian
