#pragma once

#include <optional>
#include <string>
#include <vector>

#include "custodian/context.hpp"
#include "custodian/model.hpp"

namespace custodian {

bool role_may_create_cases(Role role) noexcept;

class CaseService {
 public:
  explicit CaseService(Context ctx) : ctx_(ctx) {}

  Case create_case(const std::string& details, const std::string& description, const PrincipalId& creator);
  [[nodiscard]] Case get_case(const CaseId& id, const PrincipalId& principal);
  [[nodiscard]] std::vector<Case> list_cases(const PrincipalId& principal) const;
  Case add_investigator(const CaseId& id, const PrincipalId& who, const PrincipalId& by);
  Case close_case(const CaseId& id, const PrincipalId& by);

  Note attach_note(const CaseId& id, const NoteTarget& target, const std::string& body, const PrincipalId& author);
  [[nodiscard]] std::vector<Note> notes(const CaseId& id, const PrincipalId& principal);

  ReportSections set_report_section(const CaseId& id, ReportSection section, const std::string& text,
                                    const PrincipalId& principal);
  [[nodiscard]] ReportSections report_sections(const CaseId& id, const PrincipalId& principal);

  [[nodiscard]] std::vector<EvidenceItem> list_evidence(const CaseId& id, const PrincipalId& principal);

  // ---- helpers for other services (caller holds the transaction)
  [[nodiscard]] static std::optional<Case> load(store::Database& db, const CaseId& id);
  static Case require_open(store::Database& db, const CaseId& id);
  static void touch(store::Database& db, const CaseId& id, Timestamp now);
  [[nodiscard]] static std::vector<Note> load_notes(store::Database& db, const CaseId& id);
  [[nodiscard]] static ReportSections load_sections(store::Database& db, const CaseId& id);

 private:
  Context ctx_;
};

}  // namespace custodian
