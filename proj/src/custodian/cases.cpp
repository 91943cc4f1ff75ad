#include "custodian/cases.hpp"

#include "custodian/vault.hpp"

namespace custodian {

bool role_may_create_cases(Role role) noexcept { return role != Role::Auditor; }

namespace {

constexpr const char* kCaseCols =
    "SELECT id, details, description, created_at, modified_at, status FROM cases ";

Case row_to_case(store::Database& db, const store::Statement& st) {
  Case c;
  c.id = CaseId::parse(st.text(0));
  c.details = st.text(1);
  c.description = st.text(2);
  c.created_at = Timestamp::parse(st.text(3)).value_or(Timestamp{});
  c.modified_at = Timestamp::parse(st.text(4)).value_or(Timestamp{});
  c.status = parse_case_status(st.text(5));
  auto inv = db.prepare("SELECT principal_id FROM case_investigators WHERE case_id = ? ORDER BY position");
  inv.bind(1, c.id.str());
  while (inv.step()) c.investigators.push_back(PrincipalId::parse(inv.text(0)));
  return c;
}

ObjectRef case_ref(const CaseId& id) { return {Category::Case, id.str()}; }
ObjectRef report_ref(const CaseId& id) { return {Category::ReportInfo, id.str()}; }

void grant_roster_rights(AccessControl& access, store::Database& db, const CaseId& case_id,
                         const PrincipalId& who) {
  access.put_entry(db, {who, case_ref(case_id), Right::Write, Effect::Allow});
  access.put_entry(db, {who, report_ref(case_id), Right::Write, Effect::Allow});
}

}  // namespace

std::optional<Case> CaseService::load(store::Database& db, const CaseId& id) {
  auto st = db.prepare(std::string(kCaseCols) + "WHERE id = ?");
  st.bind(1, id.str());
  if (!st.step()) return std::nullopt;
  return row_to_case(db, st);
}

Case CaseService::require_open(store::Database& db, const CaseId& id) {
  auto c = load(db, id);
  if (!c) fail(ErrorCode::UnknownCase, "unknown case " + id.str());
  if (c->status == CaseStatus::Closed) fail(ErrorCode::CaseClosed, "case " + id.str() + " is closed");
  return *c;
}

void CaseService::touch(store::Database& db, const CaseId& id, Timestamp now) {
  // modified_at never moves backwards, so created_at <= modified_at holds
  auto st = db.prepare("UPDATE cases SET modified_at = ? WHERE id = ? AND modified_at < ?");
  auto iso = now.iso8601();
  st.bind(1, iso).bind(2, id.str()).bind(3, iso);
  st.run();
}

Case CaseService::create_case(const std::string& details, const std::string& description,
                              const PrincipalId& creator) {
  auto who = ctx_.access.principal(creator);
  if (!role_may_create_cases(who.role)) {
    fail(ErrorCode::AccessDenied, "role " + std::string(to_string(who.role)) + " may not create cases");
  }
  return ctx_.store.write([&](store::Database& db) {
    Case c;
    c.id = CaseId::generate();
    c.details = details;
    c.description = description;
    c.created_at = ctx_.clock.now();
    c.modified_at = c.created_at;
    c.investigators = {creator};
    auto ins = db.prepare(
        "INSERT INTO cases (id, details, description, created_at, modified_at, status) VALUES (?, ?, ?, ?, ?, 'OPEN')");
    ins.bind(1, c.id.str()).bind(2, details).bind(3, description).bind(4, c.created_at.iso8601()).bind(
        5, c.modified_at.iso8601());
    ins.run();
    auto roster = db.prepare("INSERT INTO case_investigators (case_id, principal_id, position) VALUES (?, ?, 0)");
    roster.bind(1, c.id.str()).bind(2, creator.str());
    roster.run();
    grant_roster_rights(ctx_.access, db, c.id, creator);
    ctx_.ledger.append(db, EventDraft{.principal = creator,
                                      .case_id = c.id,
                                      .kind = EventKind::CaseCreate,
                                      .description = "case created: " + details});
    return c;
  });
}

Case CaseService::get_case(const CaseId& id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, case_ref(id));
  return ctx_.store.read([&](store::Database& db) { return *load(db, id); });
}

std::vector<Case> CaseService::list_cases(const PrincipalId& principal) const {
  return ctx_.store.read([&](store::Database& db) {
    (void)ctx_.access.principal(db, principal);
    std::vector<Case> out;
    auto st = db.prepare(std::string(kCaseCols) + "ORDER BY created_at, id");
    while (st.step()) {
      auto c = row_to_case(db, st);
      if (ctx_.access.can_view(db, principal, case_ref(c.id))) out.push_back(std::move(c));
    }
    return out;
  });
}

Case CaseService::add_investigator(const CaseId& id, const PrincipalId& who, const PrincipalId& by) {
  ctx_.access.require(by, Right::Write, case_ref(id));
  CaseGuard guard(ctx_.locks, id);
  return ctx_.store.write([&](store::Database& db) {
    auto c = require_open(db, id);
    auto member = ctx_.access.principal(db, who);
    for (const auto& existing : c.investigators) {
      if (existing == who) return c;
    }
    auto ins = db.prepare("INSERT INTO case_investigators (case_id, principal_id, position) VALUES (?, ?, ?)");
    ins.bind(1, id.str()).bind(2, who.str()).bind(3, static_cast<std::int64_t>(c.investigators.size()));
    ins.run();
    grant_roster_rights(ctx_.access, db, id, who);
    for (const auto& item : Vault::load_case(db, id)) {
      ctx_.access.put_entry(db, {who, {Category::Evidence, item.id.str()}, Right::Write, Effect::Allow});
    }
    touch(db, id, ctx_.clock.now());
    ctx_.ledger.append(db, EventDraft{.principal = by,
                                      .case_id = id,
                                      .kind = EventKind::AclChange,
                                      .description = "investigator added: " + member.username + " id " + who.str()});
    return *load(db, id);
  });
}

Case CaseService::close_case(const CaseId& id, const PrincipalId& by) {
  ctx_.access.require(by, Right::Write, case_ref(id));
  CaseGuard guard(ctx_.locks, id);
  return ctx_.store.write([&](store::Database& db) {
    require_open(db, id);
    auto now = ctx_.clock.now();
    auto st = db.prepare("UPDATE cases SET status = 'CLOSED' WHERE id = ?");
    st.bind(1, id.str());
    st.run();
    touch(db, id, now);
    ctx_.ledger.append(db, EventDraft{.principal = by,
                                      .case_id = id,
                                      .kind = EventKind::CaseClose,
                                      .description = "case closed"});
    return *load(db, id);
  });
}

namespace {

Note row_to_note(const store::Statement& st) {
  Note n;
  n.id = NoteId::parse(st.text(0));
  n.case_id = CaseId::parse(st.text(1));
  if (auto ev = st.optional_text(2)) n.target.evidence = EvidenceId::parse(*ev);
  if (auto sec = st.optional_text(3)) n.target.section = parse_report_section(*sec);
  n.author = PrincipalId::parse(st.text(4));
  n.created_at = Timestamp::parse(st.text(5)).value_or(Timestamp{});
  n.body = st.text(6);
  return n;
}

}  // namespace

std::vector<Note> CaseService::load_notes(store::Database& db, const CaseId& id) {
  std::vector<Note> out;
  auto st = db.prepare(
      "SELECT id, case_id, evidence_id, section, author, created_at, body FROM notes WHERE case_id = ? "
      "ORDER BY rowid");
  st.bind(1, id.str());
  while (st.step()) out.push_back(row_to_note(st));
  return out;
}

Note CaseService::attach_note(const CaseId& id, const NoteTarget& target, const std::string& body,
                              const PrincipalId& author) {
  if (target.evidence.has_value() == target.section.has_value()) {
    fail(ErrorCode::UnknownTarget, "note target must be exactly one of evidence or report section");
  }
  if (body.empty()) fail(ErrorCode::EmptyBody, "note body must be non-empty");

  if (target.evidence) {
    // the evidence must exist in this case; otherwise the target is unknown
    bool in_case = ctx_.store.read([&](store::Database& db) {
      auto item = Vault::load(db, *target.evidence);
      return item && item->case_id == id;
    });
    if (!in_case) {
      ctx_.access.require(author, Right::View, case_ref(id));
      fail(ErrorCode::UnknownTarget, "evidence " + target.evidence->str() + " is not part of case " + id.str());
    }
    ctx_.access.require(author, Right::Write, {Category::Evidence, target.evidence->str()});
  } else {
    ctx_.access.require(author, Right::View, case_ref(id));
    ctx_.access.require(author, Right::Write, report_ref(id));
  }

  CaseGuard guard(ctx_.locks, id);
  return ctx_.store.write([&](store::Database& db) {
    require_open(db, id);
    Note n;
    n.id = NoteId::generate();
    n.case_id = id;
    n.target = target;
    n.author = author;
    n.created_at = ctx_.clock.now();
    n.body = body;
    auto ins = db.prepare(
        "INSERT INTO notes (id, case_id, evidence_id, section, author, created_at, body) VALUES (?, ?, ?, ?, ?, ?, ?)");
    ins.bind(1, n.id.str()).bind(2, id.str());
    if (target.evidence) {
      ins.bind(3, target.evidence->str()).bind(4, std::nullopt);
    } else {
      ins.bind(3, std::nullopt).bind(4, to_string(*target.section));
    }
    ins.bind(5, author.str()).bind(6, n.created_at.iso8601()).bind(7, body);
    ins.run();
    touch(db, id, n.created_at);
    EventDraft d{.principal = author, .case_id = id, .kind = EventKind::Note};
    if (target.evidence) {
      d.evidence_id = *target.evidence;
      d.description = "note " + n.id.str() + " attached to evidence";
    } else {
      d.description = "note " + n.id.str() + " attached to report section " + std::string(to_string(*target.section));
    }
    ctx_.ledger.append(db, d);
    return n;
  });
}

std::vector<Note> CaseService::notes(const CaseId& id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, case_ref(id));
  return ctx_.store.read([&](store::Database& db) {
    std::vector<Note> visible;
    const bool report_readable = ctx_.access.authorize(db, principal, Right::Read, report_ref(id)) == Decision::Allow;
    for (auto& n : load_notes(db, id)) {
      bool ok = n.target.evidence ? ctx_.access.authorize(db, principal, Right::Read,
                                                          {Category::Evidence, n.target.evidence->str()}) ==
                                        Decision::Allow
                                  : report_readable;
      if (ok) visible.push_back(std::move(n));
    }
    return visible;
  });
}

ReportSections CaseService::load_sections(store::Database& db, const CaseId& id) {
  ReportSections s;
  auto st = db.prepare("SELECT section, body FROM report_sections WHERE case_id = ?");
  st.bind(1, id.str());
  while (st.step()) {
    switch (parse_report_section(st.text(0))) {
      case ReportSection::ExecutiveSummary: s.executive_summary = st.text(1); break;
      case ReportSection::Introduction: s.introduction = st.text(1); break;
      case ReportSection::Conclusion: s.conclusion = st.text(1); break;
    }
  }
  return s;
}

ReportSections CaseService::set_report_section(const CaseId& id, ReportSection section, const std::string& text,
                                               const PrincipalId& principal) {
  ctx_.access.require(principal, Right::View, case_ref(id));
  ctx_.access.require(principal, Right::Write, report_ref(id));
  CaseGuard guard(ctx_.locks, id);
  return ctx_.store.write([&](store::Database& db) {
    require_open(db, id);
    auto st = db.prepare(
        "INSERT INTO report_sections (case_id, section, body) VALUES (?, ?, ?) "
        "ON CONFLICT (case_id, section) DO UPDATE SET body = excluded.body");
    st.bind(1, id.str()).bind(2, to_string(section)).bind(3, text);
    st.run();
    touch(db, id, ctx_.clock.now());
    ctx_.ledger.append(db, EventDraft{.principal = principal,
                                      .case_id = id,
                                      .kind = EventKind::Note,
                                      .description = "report section " + std::string(to_string(section)) +
                                                     " set (" + std::to_string(text.size()) + " bytes)"});
    return load_sections(db, id);
  });
}

ReportSections CaseService::report_sections(const CaseId& id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::View, case_ref(id));
  ctx_.access.require(principal, Right::Read, report_ref(id));
  return ctx_.store.read([&](store::Database& db) { return load_sections(db, id); });
}

std::vector<EvidenceItem> CaseService::list_evidence(const CaseId& id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::View, case_ref(id));
  return ctx_.store.read([&](store::Database& db) {
    std::vector<EvidenceItem> out;
    for (auto& item : Vault::load_case(db, id)) {
      if (ctx_.access.authorize(db, principal, Right::View, {Category::Evidence, item.id.str()}) ==
          Decision::Allow) {
        out.push_back(std::move(item));
      }
    }
    return out;
  });
}

}  // namespace custodian
