#include "custodian/codec.hpp"

#include <openssl/evp.h>

#include "custodian/hex.hpp"

namespace custodian::codec {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) fail(ErrorCode::InvalidArgument, "base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                          static_cast<int>(clean.size()));
  if (n < 0) fail(ErrorCode::InvalidArgument, "invalid base64");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace {

json right_or_none(const MaybeRight& r) { return r ? json(to_string(*r)) : json("NONE"); }

}  // namespace

json to_json(const Principal& p) {
  return {{"id", p.id.str()},
          {"username", p.username},
          {"display_name", p.display_name},
          {"role", to_string(p.role)},
          {"created_at", p.created_at.iso8601()}};
}

json to_json(const Case& c) {
  json inv = json::array();
  for (const auto& i : c.investigators) inv.push_back(i.str());
  return {{"id", c.id.str()},
          {"details", c.details},
          {"description", c.description},
          {"created_at", c.created_at.iso8601()},
          {"modified_at", c.modified_at.iso8601()},
          {"investigators", inv},
          {"status", to_string(c.status)}};
}

json to_json(const EvidenceItem& e) {
  json j{{"id", e.id.str()},
         {"case_id", e.case_id.str()},
         {"display_name", e.display_name},
         {"source_description", e.source_description},
         {"size_bytes", e.size_bytes},
         {"sha1", e.sha1.hex},
         {"sha256", e.sha256.hex},
         {"acquired_at", e.acquired_at.iso8601()},
         {"acquired_by", e.acquired_by.str()},
         {"status", to_string(e.status)},
         {"parent", nullptr}};
  if (e.parent) {
    json p{{"evidence_id", e.parent->parent.str()}, {"relation", to_string(e.parent->relation)}};
    if (e.parent->relation == Relation::ExtractedFrom) {
      p["offset"] = e.parent->offset;
      p["length"] = e.parent->length;
    }
    j["parent"] = p;
  }
  return j;
}

json to_json(const Note& n) {
  json target;
  if (n.target.evidence) {
    target = {{"evidence_id", n.target.evidence->str()}};
  } else if (n.target.section) {
    target = {{"section", to_string(*n.target.section)}};
  }
  return {{"id", n.id.str()},
          {"case_id", n.case_id.str()},
          {"target", target},
          {"author", n.author.str()},
          {"created_at", n.created_at.iso8601()},
          {"body", n.body}};
}

json to_json(const CustodyEvent& e) {
  auto opt = [](const auto& v) -> json { return v ? json(v->str()) : json(nullptr); };
  return {{"seq", e.seq},
          {"timestamp", e.timestamp.iso8601()},
          {"principal", opt(e.principal)},
          {"case_id", opt(e.case_id)},
          {"evidence_id", opt(e.evidence_id)},
          {"related_evidence_id", opt(e.related_evidence_id)},
          {"kind", to_string(e.kind)},
          {"description", e.description},
          {"pre_digest", e.pre_digest ? json(e.pre_digest->tagged()) : json(nullptr)},
          {"post_digest", e.post_digest ? json(e.post_digest->tagged()) : json(nullptr)},
          {"caused_by_seq", e.caused_by_seq ? json(*e.caused_by_seq) : json(nullptr)},
          {"chain_hash", to_hex(e.chain_hash)}};
}

json to_json(const ReportSections& s) {
  return {{"executive_summary", s.executive_summary}, {"introduction", s.introduction}, {"conclusion", s.conclusion}};
}

json to_json(const AccessControlEntry& a) {
  return {{"principal_id", a.principal.str()},
          {"category", to_string(a.object.category)},
          {"object_id", a.object.id},
          {"right", to_string(a.right)},
          {"effect", to_string(a.effect)}};
}

json to_json(const DefaultRightsPolicy& p) {
  json roles = json::object();
  for (Role r : {Role::Administrator, Role::Investigator, Role::Auditor}) {
    json per = json::object();
    for (Category c : {Category::Case, Category::Evidence, Category::ReportInfo}) {
      per[std::string(to_string(c))] = right_or_none(p.role_default(r, c));
    }
    roles[std::string(to_string(r))] = per;
  }
  json cats = json::object();
  for (Category c : {Category::Case, Category::Evidence, Category::ReportInfo}) {
    cats[std::string(to_string(c))] = right_or_none(p.category_default(c));
  }
  return {{"role_defaults", roles}, {"category_defaults", cats}};
}

json to_json(const ChainStatus& s) {
  json j{{"status", s.ok ? "OK" : "BROKEN_AT"}, {"events", s.events}};
  j["broken_at"] = s.ok ? json(nullptr) : json(s.broken_at);
  return j;
}

json to_json(const ToolInvocation& inv) {
  json targets = json::array();
  for (const auto& t : inv.targets) targets.push_back(t.str());
  std::string err(inv.stderr_capture.begin(), inv.stderr_capture.end());
  return {{"invocation_id", inv.id.str()},
          {"plugin_id", inv.plugin_id},
          {"plugin_version", inv.plugin_version},
          {"case_id", inv.case_id.str()},
          {"principal", inv.principal.str()},
          {"params", inv.params},
          {"targets", targets},
          {"argv", inv.argv},
          {"started_at", inv.started_at.iso8601()},
          {"finished_at", inv.finished_at.iso8601()},
          {"exit_status", inv.exit_status},
          {"stdout_evidence", inv.stdout_evidence ? json(inv.stdout_evidence->str()) : json(nullptr)},
          {"stderr_base64", base64_encode(inv.stderr_capture)},
          {"outcome", to_string(inv.outcome)}};
}

json to_json(const BatchReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    json j{{"index", s.index}, {"plugin_id", s.plugin_id}, {"outcome", s.outcome()}};
    j["invocations"] = to_json(s.invocations);
    if (s.error) j["error"] = {{"code", error_code_name(*s.error)}, {"message", s.error_message}};
    steps.push_back(std::move(j));
  }
  return {{"steps", steps}};
}

json to_json(const StoredReport& r) {
  return {{"event_seq", r.event_seq},
          {"case_id", r.case_id.str()},
          {"file_name", r.file_name},
          {"media_type", r.media_type},
          {"sha256", r.sha256},
          {"size_bytes", r.size_bytes}};
}

}  // namespace custodian::codec
