#include "custodian/ledger.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "custodian/digest.hpp"
#include "custodian/hex.hpp"

namespace custodian {

namespace {

void put_field(std::vector<std::uint8_t>& out, std::string_view s) {
  const auto n = static_cast<std::uint32_t>(s.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), s.begin(), s.end());
}

template <class T>
std::string opt_str(const std::optional<T>& v) {
  return v ? v->str() : std::string();
}

std::string opt_digest(const std::optional<DigestValue>& d) { return d ? d->tagged() : std::string(); }

constexpr const char* kSelect =
    "SELECT seq, timestamp, timestamp_ms, principal_id, case_id, evidence_id, related_evidence_id, "
    "kind, description, pre_digest, post_digest, caused_by_seq, chain_hash FROM custody_events ";

CustodyEvent row_to_event(const store::Statement& st) {
  CustodyEvent e;
  e.seq = static_cast<std::uint64_t>(st.integer(0));
  e.timestamp = Timestamp{st.integer(2)};
  if (auto v = st.optional_text(3)) e.principal = PrincipalId::parse(*v);
  if (auto v = st.optional_text(4)) e.case_id = CaseId::parse(*v);
  if (auto v = st.optional_text(5)) e.evidence_id = EvidenceId::parse(*v);
  if (auto v = st.optional_text(6)) e.related_evidence_id = EvidenceId::parse(*v);
  e.kind = parse_event_kind(st.text(7));
  e.description = st.text(8);
  if (auto v = st.optional_text(9)) e.pre_digest = DigestValue::from_tagged(*v);
  if (auto v = st.optional_text(10)) e.post_digest = DigestValue::from_tagged(*v);
  if (auto v = st.optional_integer(11)) e.caused_by_seq = static_cast<std::uint64_t>(*v);
  auto h = st.blob(12);
  if (h.size() == 32) std::copy(h.begin(), h.end(), e.chain_hash.begin());
  return e;
}

}  // namespace

std::vector<std::uint8_t> canonical_encoding(const CustodyEvent& e) {
  std::vector<std::uint8_t> out;
  out.reserve(128 + e.description.size());
  put_field(out, std::to_string(e.seq));
  put_field(out, e.timestamp.iso8601());
  put_field(out, opt_str(e.principal));
  put_field(out, opt_str(e.case_id));
  put_field(out, opt_str(e.evidence_id));
  put_field(out, opt_str(e.related_evidence_id));
  put_field(out, to_string(e.kind));
  put_field(out, e.description);
  put_field(out, opt_digest(e.pre_digest));
  put_field(out, opt_digest(e.post_digest));
  put_field(out, e.caused_by_seq ? std::to_string(*e.caused_by_seq) : std::string());
  return out;
}

std::array<std::uint8_t, 32> chain_hash(const std::array<std::uint8_t, 32>& previous,
                                        const CustodyEvent& event) {
  Sha256 h;
  h.update(previous);
  h.update(canonical_encoding(event));
  return h.finish();
}

CustodyEvent Ledger::append(store::Database& db, const EventDraft& d) {
  if (!store_.in_write_transaction()) {
    fail(ErrorCode::Internal, "ledger append outside a write transaction");
  }
  fault_hook(FaultPoint::LedgerAppend);

  auto exists = [&db](const char* sql, const std::string& id) {
    auto st = db.prepare(sql);
    st.bind(1, id);
    return st.step();
  };
  if (d.principal && !exists("SELECT 1 FROM principals WHERE id = ?", d.principal->str())) {
    fail(ErrorCode::ReferentialFailure, "event references unknown principal");
  }
  if (d.case_id && !exists("SELECT 1 FROM cases WHERE id = ?", d.case_id->str())) {
    fail(ErrorCode::ReferentialFailure, "event references unknown case");
  }
  for (const auto* ev : {&d.evidence_id, &d.related_evidence_id}) {
    if (*ev && !exists("SELECT 1 FROM evidence WHERE id = ?", (*ev)->str())) {
      fail(ErrorCode::ReferentialFailure, "event references unknown evidence");
    }
  }
  if (d.kind == EventKind::CorruptionDetected) {
    if (!d.evidence_id || !d.caused_by_seq) {
      fail(ErrorCode::ReferentialFailure, "corruption event needs evidence and caused_by_seq");
    }
    auto chk = db.prepare(
        "SELECT 1 FROM custody_events WHERE seq = ? AND (evidence_id = ? OR related_evidence_id = ?)");
    chk.bind(1, static_cast<std::int64_t>(*d.caused_by_seq))
        .bind(2, d.evidence_id->str())
        .bind(3, d.evidence_id->str());
    if (!chk.step()) {
      fail(ErrorCode::ReferentialFailure, "caused_by_seq does not reference an event on this evidence");
    }
  }

  std::uint64_t last_seq = 0;
  std::int64_t last_ms = 0;
  std::array<std::uint8_t, 32> prev = kGenesisHash;
  {
    auto st = db.prepare(
        "SELECT seq, timestamp_ms, chain_hash FROM custody_events ORDER BY seq DESC LIMIT 1");
    if (st.step()) {
      last_seq = static_cast<std::uint64_t>(st.integer(0));
      last_ms = st.integer(1);
      auto h = st.blob(2);
      if (h.size() == 32) std::copy(h.begin(), h.end(), prev.begin());
    }
  }

  CustodyEvent e;
  e.seq = last_seq + 1;
  e.timestamp = Timestamp{std::max(clock_.now().ms, last_ms)};
  e.principal = d.principal;
  e.case_id = d.case_id;
  e.evidence_id = d.evidence_id;
  e.related_evidence_id = d.related_evidence_id;
  e.kind = d.kind;
  e.description = d.description;
  e.pre_digest = d.pre_digest;
  e.post_digest = d.post_digest;
  e.caused_by_seq = d.caused_by_seq;
  e.chain_hash = chain_hash(prev, e);

  auto opt = [](const auto& v) -> std::optional<std::string> {
    if (!v) return std::nullopt;
    return v->str();
  };
  auto optd = [](const std::optional<DigestValue>& v) -> std::optional<std::string> {
    if (!v) return std::nullopt;
    return v->tagged();
  };
  auto ins = db.prepare(
      "INSERT INTO custody_events (seq, timestamp, timestamp_ms, principal_id, case_id, evidence_id, "
      "related_evidence_id, kind, description, pre_digest, post_digest, caused_by_seq, chain_hash) "
      "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
  ins.bind(1, static_cast<std::int64_t>(e.seq))
      .bind(2, e.timestamp.iso8601())
      .bind(3, e.timestamp.ms)
      .bind(4, opt(e.principal))
      .bind(5, opt(e.case_id))
      .bind(6, opt(e.evidence_id))
      .bind(7, opt(e.related_evidence_id))
      .bind(8, to_string(e.kind))
      .bind(9, e.description)
      .bind(10, optd(e.pre_digest))
      .bind(11, optd(e.post_digest));
  if (e.caused_by_seq) {
    ins.bind(12, static_cast<std::int64_t>(*e.caused_by_seq));
  } else {
    ins.bind(12, std::nullopt);
  }
  ins.bind(13, std::span<const std::uint8_t>(e.chain_hash));
  ins.run();
  return e;
}

std::vector<CustodyEvent> Ledger::all() const {
  return store_.read([](store::Database& db) {
    std::vector<CustodyEvent> out;
    auto st = db.prepare(std::string(kSelect) + "ORDER BY seq");
    while (st.step()) out.push_back(row_to_event(st));
    return out;
  });
}

std::vector<CustodyEvent> Ledger::range(std::uint64_t from_seq, std::uint64_t limit) const {
  return store_.read([&](store::Database& db) {
    std::vector<CustodyEvent> out;
    auto st = db.prepare(std::string(kSelect) + "WHERE seq >= ? ORDER BY seq LIMIT ?");
    st.bind(1, static_cast<std::int64_t>(from_seq)).bind(2, static_cast<std::int64_t>(limit));
    while (st.step()) out.push_back(row_to_event(st));
    return out;
  });
}

std::vector<CustodyEvent> Ledger::for_evidence(const EvidenceId& id) const {
  return store_.read([&](store::Database& db) { return for_evidence(db, id); });
}

std::vector<CustodyEvent> Ledger::for_evidence(store::Database& db, const EvidenceId& id) const {
  {
    auto chk = db.prepare("SELECT 1 FROM evidence WHERE id = ?");
    chk.bind(1, id.str());
    if (!chk.step()) fail(ErrorCode::UnknownEvidence, "unknown evidence " + id.str());
  }
  std::vector<CustodyEvent> out;
  auto st = db.prepare(std::string(kSelect) +
                       "WHERE evidence_id = ?1 OR related_evidence_id = ?1 ORDER BY seq");
  st.bind(1, id.str());
  while (st.step()) out.push_back(row_to_event(st));
  return out;
}

std::optional<std::uint64_t> Ledger::latest_seq_for(store::Database& db, const EvidenceId& id) const {
  auto st = db.prepare(
      "SELECT MAX(seq) FROM custody_events WHERE (evidence_id = ?1 OR related_evidence_id = ?1) "
      "AND kind <> 'AUTH'");
  st.bind(1, id.str());
  if (!st.step() || st.is_null(0)) return std::nullopt;
  return static_cast<std::uint64_t>(st.integer(0));
}

ChainStatus Ledger::verify_chain() const {
  return store_.read([](store::Database& db) {
    ChainStatus status;
    std::array<std::uint8_t, 32> prev = kGenesisHash;
    std::uint64_t expected = 1;
    auto st = db.prepare(std::string(kSelect) + "ORDER BY seq");
    while (st.step()) {
      CustodyEvent e;
      try {
        e = row_to_event(st);
        // the ISO text and the ms column must agree; an edit to either breaks the chain
        auto iso = st.text(1);
        auto parsed = Timestamp::parse(iso);
        if (!parsed || parsed->ms != e.timestamp.ms || parsed->iso8601() != iso) {
          return ChainStatus{false, e.seq, status.events};
        }
      } catch (const Error&) {
        // unparseable row content counts as tampering
        return ChainStatus{false, static_cast<std::uint64_t>(st.integer(0)), status.events};
      }
      if (e.seq != expected) return ChainStatus{false, expected, status.events};
      auto h = chain_hash(prev, e);
      if (h != e.chain_hash) return ChainStatus{false, e.seq, status.events};
      prev = h;
      ++expected;
      ++status.events;
    }
    return status;
  });
}

std::uint64_t Ledger::size() const {
  return store_.read([](store::Database& db) {
    auto st = db.prepare("SELECT COUNT(*) FROM custody_events");
    st.step();
    return static_cast<std::uint64_t>(st.integer(0));
  });
}

void Ledger::export_to(std::ostream& out) const {
  store_.read([&](store::Database& db) {
    auto st = db.prepare(std::string(kSelect) + "ORDER BY seq");
    while (st.step()) {
      auto e = row_to_event(st);
      out << to_hex(canonical_encoding(e)) << ' ' << to_hex(e.chain_hash) << '\n';
    }
  });
}

ChainStatus Ledger::verify_export(std::istream& in) {
  ChainStatus status;
  std::array<std::uint8_t, 32> prev = kGenesisHash;
  std::string line;
  std::uint64_t expected = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto sp = line.find(' ');
    auto canonical = from_hex(line.substr(0, sp));
    auto stored = sp == std::string::npos ? std::nullopt : from_hex(line.substr(sp + 1));
    if (!canonical || !stored || stored->size() != 32 || canonical->size() < 4) {
      return {false, expected, status.events};
    }
    // first field is the decimal seq
    const auto& c = *canonical;
    std::uint32_t n = (std::uint32_t{c[0]} << 24) | (std::uint32_t{c[1]} << 16) |
                      (std::uint32_t{c[2]} << 8) | std::uint32_t{c[3]};
    if (4 + n > c.size()) return {false, expected, status.events};
    std::string seq_text(c.begin() + 4, c.begin() + 4 + n);
    if (seq_text != std::to_string(expected)) return {false, expected, status.events};
    Sha256 h;
    h.update(prev);
    h.update(c);
    auto digest = h.finish();
    if (!std::equal(digest.begin(), digest.end(), stored->begin())) {
      return {false, expected, status.events};
    }
    prev = digest;
    ++expected;
    ++status.events;
  }
  return status;
}

}  // namespace custodian
