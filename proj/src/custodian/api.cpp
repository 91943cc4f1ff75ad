#include "custodian/api.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "custodian/codec.hpp"
#include "custodian/version.hpp"
#include "custodian/viewer.hpp"

namespace custodian::api {

namespace fs = std::filesystem;
using codec::to_json;

json error_json(ErrorCode code, const std::string& message) {
  return {{"error", {{"code", error_code_name(code)}, {"message", message}}}};
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return 200;
    case ErrorCode::UnknownCase:
    case ErrorCode::UnknownEvidence:
    case ErrorCode::UnknownPrincipal:
    case ErrorCode::UnknownObject:
    case ErrorCode::UnknownTarget:
    case ErrorCode::UnknownPlugin: return 404;
    case ErrorCode::AccessDenied: return 403;
    case ErrorCode::BadCredentials:
    case ErrorCode::AuthRequired: return 401;
    case ErrorCode::DigestUnparseable:
    case ErrorCode::RangeOutOfBounds:
    case ErrorCode::EmptyBody:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParamInvalid:
    case ErrorCode::PlanInvalid: return 400;
    case ErrorCode::DigestMismatch:
    case ErrorCode::SourceCorrupt:
    case ErrorCode::CaseClosed:
    case ErrorCode::Duplicate:
    case ErrorCode::DeletionRefused:
    case ErrorCode::ReferentialFailure: return 409;
    case ErrorCode::ManifestInvalid:
    case ErrorCode::LatexCompileFailed:
    case ErrorCode::ToolFailed: return 422;
    case ErrorCode::Locked: return 423;
    case ErrorCode::LatexEngineMissing: return 503;
    case ErrorCode::Timeout: return 504;
    case ErrorCode::StorageFailure:
    case ErrorCode::IncompatibleVersion:
    case ErrorCode::BindFailure:
    case ErrorCode::BootstrapRequired:
    case ErrorCode::IntegrityFailure:
    case ErrorCode::Internal: return 500;
  }
  return 500;
}

namespace {

// ---- argument access ------------------------------------------------------

const json& arg(const json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || args.at(key).is_null()) {
    fail(ErrorCode::InvalidArgument, std::string("missing argument '") + key + "'");
  }
  return args.at(key);
}

bool has(const json& args, const char* key) { return args.is_object() && args.contains(key) && !args.at(key).is_null(); }

std::string str(const json& args, const char* key) {
  const auto& v = arg(args, key);
  if (!v.is_string()) fail(ErrorCode::InvalidArgument, std::string("argument '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> opt_str(const json& args, const char* key) {
  if (!has(args, key)) return std::nullopt;
  return str(args, key);
}

std::uint64_t u64(const json& args, const char* key) {
  const auto& v = arg(args, key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  fail(ErrorCode::InvalidArgument, std::string("argument '") + key + "' must be a non-negative integer");
}

std::uint64_t u64_or(const json& args, const char* key, std::uint64_t fallback) {
  return has(args, key) ? u64(args, key) : fallback;
}

bool flag_or(const json& args, const char* key, bool fallback) {
  if (!has(args, key)) return fallback;
  const auto& v = args.at(key);
  if (!v.is_boolean()) fail(ErrorCode::InvalidArgument, std::string("argument '") + key + "' must be a boolean");
  return v.get<bool>();
}

CaseId case_id(const json& args, const char* key = "case_id") {
  auto s = str(args, key);
  auto id = CaseId::try_parse(s);
  if (!id) fail(ErrorCode::UnknownCase, "unknown case " + s);
  return *id;
}

EvidenceId evidence_id(const json& args, const char* key = "evidence_id") {
  auto s = str(args, key);
  auto id = EvidenceId::try_parse(s);
  if (!id) fail(ErrorCode::UnknownEvidence, "unknown evidence " + s);
  return *id;
}

std::vector<EvidenceId> evidence_list(const json& args, const char* key) {
  std::vector<EvidenceId> out;
  if (!has(args, key)) return out;
  const auto& v = args.at(key);
  if (!v.is_array()) fail(ErrorCode::InvalidArgument, std::string("argument '") + key + "' must be an array");
  for (const auto& item : v) {
    if (!item.is_string()) fail(ErrorCode::InvalidArgument, "evidence ids must be strings");
    auto id = EvidenceId::try_parse(item.get<std::string>());
    if (!id) fail(ErrorCode::UnknownEvidence, "unknown evidence " + item.get<std::string>());
    out.push_back(*id);
  }
  return out;
}

MaybeRight right_or_none(const std::string& s) {
  if (s == "NONE") return std::nullopt;
  return parse_right(s);
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot read file " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Call {
  Engine& engine;
  const Request& req;
  const json& args;
  std::optional<PrincipalId> principal;

  const PrincipalId& who() const { return *principal; }
};

using Handler = std::function<Response(Call&)>;

Response body(json j) {
  Response r;
  r.body = std::move(j);
  return r;
}

PrincipalId principal_arg(Call& c) {
  if (auto id = opt_str(c.args, "principal_id")) {
    auto parsed = PrincipalId::try_parse(*id);
    if (!parsed) fail(ErrorCode::UnknownPrincipal, "unknown principal " + *id);
    return *parsed;
  }
  auto name = str(c.args, "username");
  auto p = c.engine.access().find_username(name);
  if (!p) fail(ErrorCode::UnknownPrincipal, "unknown principal '" + name + "'");
  return p->id;
}

ObjectRef object_arg(const json& args) {
  return {parse_category(str(args, "category")), str(args, "object_id")};
}

// Upload source: raw body, base64 text, or (in-process only) a file path.
struct Upload {
  std::vector<std::uint8_t> owned;
  std::span<const std::uint8_t> bytes;
  std::optional<fs::path> path;
};

Upload upload(Call& c) {
  Upload u;
  if (auto p = opt_str(c.args, "path")) {
    if (!c.req.local) fail(ErrorCode::InvalidArgument, "file paths are accepted only from local callers");
    u.path = fs::path(*p);
    return u;
  }
  if (auto b64 = opt_str(c.args, "content_base64")) {
    u.owned = codec::base64_decode(*b64);
    u.bytes = u.owned;
    return u;
  }
  u.bytes = c.req.body;
  return u;
}

std::string sidecar_text(Call& c) {
  if (auto s = opt_str(c.args, "sidecar")) return *s;
  if (auto p = opt_str(c.args, "sidecar_path")) {
    if (!c.req.local) fail(ErrorCode::InvalidArgument, "file paths are accepted only from local callers");
    auto bytes = read_file(*p);
    return {bytes.begin(), bytes.end()};
  }
  fail(ErrorCode::InvalidArgument, "missing argument 'sidecar'");
}

ReportSpec report_spec(Call& c) {
  ReportSpec spec;
  spec.case_id = case_id(c.args);
  spec.selected_evidence = evidence_list(c.args, "evidence");
  if (has(c.args, "excerpts")) {
    const auto& ex = c.args.at("excerpts");
    if (!ex.is_object()) fail(ErrorCode::InvalidArgument, "excerpts must map evidence ids to window lists");
    for (const auto& [id_text, windows] : ex.items()) {
      auto id = EvidenceId::try_parse(id_text);
      if (!id) fail(ErrorCode::UnknownEvidence, "unknown evidence " + id_text);
      if (!windows.is_array()) fail(ErrorCode::InvalidArgument, "excerpt windows must be an array");
      auto& out = spec.excerpts[*id];
      for (const auto& w : windows) out.push_back({u64(w, "offset"), u64(w, "length")});
    }
  }
  if (has(c.args, "include")) {
    const auto& inc = c.args.at("include");
    spec.include_notes = flag_or(inc, "notes", true);
    spec.include_custody_table = flag_or(inc, "custody_table", true);
    spec.include_evidence_printout = flag_or(inc, "evidence_printout", true);
  }
  if (auto f = opt_str(c.args, "format")) spec.output = parse_report_format(*f);
  return spec;
}

Response artifact(const ReportArtifact& art) {
  Response r;
  r.body = {{"event_seq", art.event_seq},
            {"media_type", art.media_type},
            {"file_name", art.file_name},
            {"size_bytes", art.bytes.size()}};
  r.bytes = art.bytes;
  r.media_type = art.media_type;
  r.file_name = art.file_name;
  return r;
}

// "params" holds typed JSON values; "<text_key>" holds command-line strings
// coerced by each parameter's declared type. Text entries win.
json typed_params(Call& c, const PluginManifest& m, const char* key, const char* text_key) {
  json params = has(c.args, key) ? c.args.at(key) : json::object();
  if (!params.is_object()) fail(ErrorCode::ParamInvalid, std::string(key) + " must be an object");
  if (has(c.args, text_key)) {
    const auto& text = c.args.at(text_key);
    if (!text.is_object()) fail(ErrorCode::ParamInvalid, std::string(text_key) + " must be an object");
    for (const auto& [name, value] : text.items()) {
      const auto* spec = m.param(name);
      if (!spec) fail(ErrorCode::ParamInvalid, "plugin " + m.plugin_id + " has no parameter '" + name + "'");
      if (value.is_null()) {
        params[name] = nullptr;
      } else if (value.is_string()) {
        params[name] = coerce_param_text(*spec, value.get<std::string>());
      } else {
        fail(ErrorCode::ParamInvalid, "text value of '" + name + "' must be a string");
      }
    }
  }
  return params;
}

json plugins_json(Engine& e) {
  json list = json::array();
  for (const auto& m : e.registry().list()) list.push_back(manifest_to_json(m));
  json diags = json::array();
  for (const auto& d : e.registry().diagnostics()) {
    diags.push_back({{"path", d.path.string()}, {"code", error_code_name(d.code)}, {"message", d.message}});
  }
  return {{"plugins", list}, {"diagnostics", diags}};
}

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      // ---- auth
      {"auth.login",
       [](Call& c) {
         auto t = c.engine.access().authenticate(str(c.args, "username"), str(c.args, "secret"));
         auto p = c.engine.access().principal(t.principal);
         return body({{"token", t.token}, {"principal", to_json(p)}, {"expires_at", t.expires_at.iso8601()}});
       }},
      {"auth.logout",
       [](Call& c) {
         c.engine.access().logout(*c.req.token);
         return body({{"ok", true}});
       }},
      {"auth.whoami", [](Call& c) { return body(to_json(c.engine.access().principal(c.who()))); }},

      // ---- cases
      {"cases.create",
       [](Call& c) {
         return body(to_json(c.engine.cases().create_case(str(c.args, "details"),
                                                          opt_str(c.args, "description").value_or(""), c.who())));
       }},
      {"cases.list", [](Call& c) { return body({{"cases", to_json(c.engine.cases().list_cases(c.who()))}}); }},
      {"cases.get", [](Call& c) { return body(to_json(c.engine.cases().get_case(case_id(c.args), c.who()))); }},
      {"cases.close", [](Call& c) { return body(to_json(c.engine.cases().close_case(case_id(c.args), c.who()))); }},
      {"cases.add_investigator",
       [](Call& c) {
         return body(to_json(c.engine.cases().add_investigator(case_id(c.args), principal_arg(c), c.who())));
       }},
      {"cases.sections.get",
       [](Call& c) { return body(to_json(c.engine.cases().report_sections(case_id(c.args), c.who()))); }},
      {"cases.sections.set",
       [](Call& c) {
         return body(to_json(c.engine.cases().set_report_section(
             case_id(c.args), parse_report_section(str(c.args, "section")), str(c.args, "text"), c.who())));
       }},

      // ---- notes
      {"notes.attach",
       [](Call& c) {
         NoteTarget target;
         if (has(c.args, "evidence_id")) {
           auto s = str(c.args, "evidence_id");
           auto id = EvidenceId::try_parse(s);
           if (!id) fail(ErrorCode::UnknownTarget, "unknown note target " + s);
           target.evidence = *id;
         } else if (has(c.args, "section")) {
           target.section = parse_report_section(str(c.args, "section"));
         } else {
           fail(ErrorCode::InvalidArgument, "a note needs an evidence_id or a section");
         }
         return body(
             to_json(c.engine.cases().attach_note(case_id(c.args), target, str(c.args, "body"), c.who())));
       }},
      {"notes.list",
       [](Call& c) { return body({{"notes", to_json(c.engine.cases().notes(case_id(c.args), c.who()))}}); }},

      // ---- evidence
      {"evidence.ingest",
       [](Call& c) {
         auto u = upload(c);
         auto cid = case_id(c.args);
         if (u.path) {
           std::ifstream in(*u.path, std::ios::binary);
           if (!in) fail(ErrorCode::InvalidArgument, "cannot read file " + u.path->string());
           auto name = opt_str(c.args, "name").value_or(u.path->filename().string());
           auto source = opt_str(c.args, "source").value_or("file " + fs::absolute(*u.path).string());
           return body(to_json(c.engine.vault().ingest(cid, in, name, source, c.who())));
         }
         return body(to_json(c.engine.vault().ingest(cid, u.bytes, str(c.args, "name"),
                                                     opt_str(c.args, "source").value_or("upload"), c.who())));
       }},
      {"evidence.import",
       [](Call& c) {
         auto u = upload(c);
         auto cid = case_id(c.args);
         auto sidecar = sidecar_text(c);
         if (u.path) {
           std::ifstream in(*u.path, std::ios::binary);
           if (!in) fail(ErrorCode::InvalidArgument, "cannot read file " + u.path->string());
           auto name = opt_str(c.args, "name").value_or(u.path->filename().string());
           return body(to_json(c.engine.vault().import_external(cid, in, sidecar, name, c.who())));
         }
         std::string copy(reinterpret_cast<const char*>(u.bytes.data()), u.bytes.size());
         std::istringstream in(std::move(copy));
         return body(to_json(c.engine.vault().import_external(cid, in, sidecar, str(c.args, "name"), c.who())));
       }},
      {"evidence.list",
       [](Call& c) { return body({{"evidence", to_json(c.engine.cases().list_evidence(case_id(c.args), c.who()))}}); }},
      {"evidence.get", [](Call& c) { return body(to_json(c.engine.vault().get(evidence_id(c.args), c.who()))); }},
      {"evidence.read",
       [](Call& c) {
         auto id = evidence_id(c.args);
         auto offset = u64_or(c.args, "offset", 0);
         auto length = std::min<std::uint64_t>(u64_or(c.args, "length", 4096), Vault::kMaxReadWindow);
         auto bytes = c.engine.vault().read_bytes(id, offset, length, c.who());
         Response r;
         r.media_type = std::string(viewer::detect_media_type(
             offset == 0 ? std::span<const std::uint8_t>(bytes)
                         : std::span<const std::uint8_t>(c.engine.vault().read_bytes(id, 0, 16, c.who()))));
         r.body = {{"evidence_id", id.str()},
                   {"offset", offset},
                   {"length", bytes.size()},
                   {"media_type", r.media_type},
                   {"content_base64", codec::base64_encode(bytes)}};
         r.bytes = std::move(bytes);
         return r;
       }},
      {"evidence.render",
       [](Call& c) {
         auto id = evidence_id(c.args);
         auto mode = viewer::parse_mode(opt_str(c.args, "mode").value_or("HEX"));
         if (!mode) fail(ErrorCode::InvalidArgument, "mode must be ASCII, UNICODE or HEX");
         auto encoding = viewer::parse_encoding(opt_str(c.args, "encoding").value_or("UTF8"));
         if (!encoding) fail(ErrorCode::InvalidArgument, "encoding must be UTF8, UTF16LE or UTF16BE");
         auto offset = u64_or(c.args, "offset", 0);
         auto length = u64_or(c.args, "length", 4096);
         if (length < 1) fail(ErrorCode::InvalidArgument, "window length must be at least 1");
         length = std::min<std::uint64_t>(length, viewer::kMaxWindow);
         auto item = c.engine.vault().get(id, c.who());
         std::vector<std::uint8_t> bytes;
         if (offset == item.size_bytes) {
           (void)c.engine.vault().read_bytes(id, 0, 0, c.who());  // access check; window is empty
         } else {
           bytes = c.engine.vault().read_bytes(id, offset, length, c.who());
         }
         Response r;
         std::string text;
         r.body = {{"evidence_id", id.str()}, {"mode", viewer::to_string(*mode)}, {"offset", offset},
                   {"length", bytes.size()}};
         switch (*mode) {
           case viewer::Mode::Ascii: text = viewer::render_ascii(bytes); break;
           case viewer::Mode::Hex: text = viewer::render_hex(bytes, offset); break;
           case viewer::Mode::Unicode: {
             auto u = viewer::render_unicode(bytes, *encoding);
             text = std::move(u.text);
             r.body["encoding"] = viewer::to_string(*encoding);
             r.body["replacements"] = u.replacements;
             break;
           }
         }
         r.body["text"] = text;
         r.bytes = std::vector<std::uint8_t>(text.begin(), text.end());
         r.media_type = "text/plain; charset=utf-8";
         return r;
       }},
      {"evidence.verify",
       [](Call& c) {
         std::optional<std::uint64_t> caused_by;
         if (has(c.args, "caused_by_seq")) caused_by = u64(c.args, "caused_by_seq");
         auto r = c.engine.vault().verify(evidence_id(c.args), c.who(), caused_by);
         return body({{"outcome", to_string(r.outcome)}, {"event", to_json(r.event)}});
       }},
      {"evidence.clone",
       [](Call& c) {
         return body(to_json(c.engine.vault().clone_evidence(evidence_id(c.args), opt_str(c.args, "name"), c.who())));
       }},
      {"evidence.extract",
       [](Call& c) {
         auto id = evidence_id(c.args);
         auto offset = u64(c.args, "offset");
         auto length = u64(c.args, "length");
         auto name = opt_str(c.args, "name");
         if (!name) {
           auto src = c.engine.vault().get(id, c.who());
           name = src.display_name + " [" + std::to_string(offset) + "+" + std::to_string(length) + "]";
         }
         return body(to_json(c.engine.vault().extract_region(id, offset, length, *name, c.who())));
       }},
      {"evidence.events",
       [](Call& c) { return body({{"events", to_json(c.engine.vault().events(evidence_id(c.args), c.who()))}}); }},
      {"evidence.delete",
       [](Call& c) -> Response { c.engine.vault().delete_evidence(evidence_id(c.args), c.who()); }},

      // ---- plugins
      {"plugins.list", [](Call& c) { return body(plugins_json(c.engine)); }},
      {"plugins.get",
       [](Call& c) { return body(manifest_to_json(c.engine.registry().find(str(c.args, "plugin_id")))); }},
      {"plugins.defaults.get",
       [](Call& c) {
         auto id = str(c.args, "plugin_id");
         return body({{"plugin_id", id}, {"values", c.engine.plugins().get_defaults(id)}});
       }},
      {"plugins.defaults.set",
       [](Call& c) {
         auto id = str(c.args, "plugin_id");
         auto values = typed_params(c, c.engine.registry().find(id), "values", "values_text");
         return body({{"plugin_id", id}, {"values", c.engine.plugins().set_defaults(id, values, c.who())}});
       }},
      {"plugins.run",
       [](Call& c) {
         auto id = str(c.args, "plugin_id");
         auto cid = case_id(c.args);
         std::optional<std::chrono::milliseconds> timeout;
         if (has(c.args, "timeout_seconds")) {
           timeout = std::chrono::milliseconds(u64(c.args, "timeout_seconds") * 1000);
         } else if (has(c.args, "timeout_ms")) {
           timeout = std::chrono::milliseconds(u64(c.args, "timeout_ms"));
         }
         auto manifest = c.engine.registry().find(id);
         auto params = typed_params(c, manifest, "params", "params_text");
         std::vector<ToolInvocation> invs;
         if (manifest.kind == PluginKind::Gathering) {
           if (!evidence_list(c.args, "targets").empty()) {
             fail(ErrorCode::InvalidArgument, "gathering tools take no targets");
           }
           invs.push_back(c.engine.plugins().invoke_gathering(id, params, cid, c.who(), timeout));
         } else {
           invs = c.engine.plugins().invoke_analysis(id, params, evidence_list(c.args, "targets"), cid, c.who(),
                                                     timeout);
         }
         return body({{"invocations", to_json(invs)}});
       }},
      {"plugins.batch",
       [](Call& c) {
         std::vector<BatchStep> plan;
         const auto& steps = arg(c.args, "steps");
         if (!steps.is_array()) fail(ErrorCode::PlanInvalid, "steps must be an array");
         for (const auto& s : steps) {
           BatchStep step;
           if (!s.is_object() || !s.contains("plugin_id") || !s["plugin_id"].is_string()) {
             fail(ErrorCode::PlanInvalid, "every step needs a plugin_id");
           }
           step.plugin_id = s["plugin_id"].get<std::string>();
           if (s.contains("params")) step.params = s["params"];
           try {
             step.targets = evidence_list(s, "targets");
           } catch (const Error& e) {
             fail(ErrorCode::PlanInvalid, e.what());
           }
           plan.push_back(std::move(step));
         }
         return body(to_json(c.engine.plugins().run_batch(plan, case_id(c.args), c.who())));
       }},
      {"plugins.invocations",
       [](Call& c) {
         return body({{"invocations", to_json(c.engine.plugins().invocations(case_id(c.args), c.who()))}});
       }},

      // ---- ledger
      {"ledger.list",
       [](Call& c) {
         c.engine.access().require_role(c.who(), {Role::Administrator, Role::Auditor});
         auto from = u64_or(c.args, "from_seq", 1);
         auto limit = u64_or(c.args, "limit", 1000);
         return body({{"events", to_json(c.engine.ledger().range(from, limit))}, {"total", c.engine.ledger().size()}});
       }},
      {"ledger.verify", [](Call& c) { return body(to_json(c.engine.ledger().verify_chain())); }},
      {"ledger.export",
       [](Call& c) {
         c.engine.access().require_role(c.who(), {Role::Administrator, Role::Auditor});
         std::ostringstream out;
         c.engine.ledger().export_to(out);
         auto text = out.str();
         auto dir = c.engine.repo().layout().ledger_export;
         auto name = "ledger-" + std::to_string(c.engine.ledger().size()) + "-" + random_id_hex().substr(0, 8) + ".txt";
         {
           std::ofstream f(dir / name, std::ios::binary);
           f << text;
           if (!f) fail(ErrorCode::StorageFailure, "cannot write " + (dir / name).string());
         }
         Response r;
         r.body = {{"path", (dir / name).string()}, {"events", c.engine.ledger().size()}};
         r.bytes = std::vector<std::uint8_t>(text.begin(), text.end());
         r.media_type = "text/plain; charset=utf-8";
         r.file_name = name;
         return r;
       }},

      // ---- reports
      {"reports.generate", [](Call& c) { return artifact(c.engine.reports().generate(report_spec(c), c.who())); }},
      {"reports.list",
       [](Call& c) { return body({{"reports", to_json(c.engine.reports().list(case_id(c.args), c.who()))}}); }},
      {"reports.download",
       [](Call& c) { return artifact(c.engine.reports().download(u64(c.args, "event_seq"), c.who())); }},

      // ---- administration
      {"admin.principals.list",
       [](Call& c) { return body({{"principals", to_json(c.engine.access().principals(c.who()))}}); }},
      {"admin.principals.create",
       [](Call& c) {
         auto username = str(c.args, "username");
         return body(to_json(c.engine.access().create_principal(
             c.who(), username, opt_str(c.args, "display_name").value_or(username),
             parse_role(str(c.args, "role")), str(c.args, "secret"))));
       }},
      {"admin.acl.list", [](Call& c) { return body({{"entries", to_json(c.engine.access().entries(c.who()))}}); }},
      {"admin.acl.grant",
       [](Call& c) {
         AccessControlEntry e{principal_arg(c), object_arg(c.args), parse_right(str(c.args, "right")),
                              parse_effect(opt_str(c.args, "effect").value_or("ALLOW"))};
         return body(to_json(c.engine.access().grant(c.who(), e)));
       }},
      {"admin.acl.revoke",
       [](Call& c) {
         c.engine.access().revoke(c.who(), principal_arg(c), object_arg(c.args), parse_right(str(c.args, "right")));
         return body({{"ok", true}});
       }},
      {"admin.defaults.get",
       [](Call& c) {
         (void)c.engine.access().principal(c.who());
         return body(to_json(c.engine.access().policy()));
       }},
      {"admin.defaults.set",
       [](Call& c) {
         auto scope = str(c.args, "scope");
         auto category = parse_category(str(c.args, "category"));
         auto right = right_or_none(str(c.args, "right"));
         if (scope == "CATEGORY") {
           return body(to_json(c.engine.access().set_category_default(c.who(), category, right)));
         }
         if (scope == "ROLE") {
           return body(
               to_json(c.engine.access().set_role_default(c.who(), parse_role(str(c.args, "role")), category, right)));
         }
         fail(ErrorCode::InvalidArgument, "scope must be ROLE or CATEGORY");
       }},

      // ---- system
      {"system.info",
       [](Call& c) {
         auto info = plugins_json(c.engine);
         return body({{"version", kVersion},
                      {"schema_version", c.engine.repo().store().schema_version()},
                      {"repository", c.engine.repo().layout().root.string()},
                      {"plugins", info["plugins"].size()},
                      {"plugin_diagnostics", info["diagnostics"]},
                      {"latex_engine", c.engine.reports().find_engine() ? json(c.engine.reports().find_engine()->string())
                                                                        : json(nullptr)}});
       }},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& Dispatcher::operations() {
  static const std::vector<std::string> ops = [] {
    std::vector<std::string> v;
    for (const auto& [name, _] : handlers()) v.push_back(name);
    return v;
  }();
  return ops;
}

Response Dispatcher::call(const Request& request) {
  const auto& h = handlers();
  auto it = h.find(request.op);
  if (it == h.end()) fail(ErrorCode::InvalidArgument, "unknown operation '" + request.op + "'");
  if (!request.args.is_object() && !request.args.is_null()) {
    fail(ErrorCode::InvalidArgument, "arguments must be a JSON object");
  }
  static const json empty = json::object();
  Call c{engine_, request, request.args.is_null() ? empty : request.args, std::nullopt};
  if (request.op != "auth.login") {
    if (!request.token || request.token->empty()) fail(ErrorCode::AuthRequired, "authentication required");
    c.principal = engine_.access().resolve_session(*request.token);
  }
  return it->second(c);
}

}  // namespace custodian::api
