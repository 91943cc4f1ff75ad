#include "custodian/reports.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "custodian/cases.hpp"
#include "custodian/digest.hpp"
#include "custodian/process.hpp"
#include "custodian/viewer.hpp"

namespace custodian {

namespace fs = std::filesystem;

std::string escape_latex(std::string_view text) {
  std::string out;
  out.reserve(text.size() + text.size() / 8);
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\textbackslash{}"; break;
      case '{': out += "\\{"; break;
      case '}': out += "\\}"; break;
      case '$': out += "\\$"; break;
      case '&': out += "\\&"; break;
      case '#': out += "\\#"; break;
      case '_': out += "\\_"; break;
      case '%': out += "\\%"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '~': out += "\\textasciitilde{}"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string_view to_string(ReportFormat f) noexcept { return f == ReportFormat::Latex ? "LATEX" : "PDF"; }

ReportFormat parse_report_format(std::string_view s) {
  if (s == "LATEX" || s == "latex" || s == "tex") return ReportFormat::Latex;
  if (s == "PDF" || s == "pdf") return ReportFormat::Pdf;
  fail(ErrorCode::InvalidArgument, "unknown report format '" + std::string(s) + "'");
}

namespace {

// Control characters would break the source; they become spaces.
std::string clean(std::string_view text, bool keep_newlines) {
  std::string out;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (c == '\n' && keep_newlines) {
      out.push_back('\n');
    } else if (u < 0x20 || u == 0x7F) {
      if (c != '\r') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string cell(std::string_view text) { return escape_latex(clean(text, false)); }

// Long hex strings in narrow columns need break points.
std::string breakable_tt(const std::string& hex) {
  std::string out = "\\texttt{";
  for (std::size_t i = 0; i < hex.size(); i += 8) {
    if (i > 0) out += "\\allowbreak{}";
    out += hex.substr(i, 8);
  }
  return out + "}";
}

std::string timestamp_cell(const Timestamp& t) {
  auto iso = t.iso8601();
  auto pos = iso.find('T');
  return iso.substr(0, pos) + "\\allowbreak{}" + iso.substr(pos);
}

// Paragraph text: blank lines separate paragraphs.
std::string text_block(std::string_view text) {
  auto cleaned = clean(text, true);
  std::string out;
  std::istringstream in(cleaned);
  std::string line;
  bool pending_break = false;
  while (std::getline(in, line)) {
    bool blank = line.find_first_not_of(' ') == std::string::npos;
    if (blank) {
      pending_break = !out.empty();
      continue;
    }
    if (pending_break) out += "\n";
    pending_break = false;
    out += escape_latex(line) + "\n";
  }
  return out;
}

// Monospace lines, one paragraph each, spaces kept.
std::string mono_block(std::string_view text) {
  std::string out = "{\\ttfamily\\footnotesize\\setlength{\\parskip}{0pt}\n";
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string esc;
    for (char c : escape_latex(clean(line, false))) {
      if (c == ' ') {
        esc += "\\ ";
      } else {
        esc.push_back(c);
      }
    }
    out += "\\noindent\\mbox{}" + esc + "\\par\n";
  }
  out += "}\n";
  return out;
}

bool looks_like_text(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return false;
  return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) {
    return (b >= 0x20 && b <= 0x7E) || b == '\n' || b == '\r' || b == '\t';
  });
}

std::string short_id(const std::string& id) { return id.substr(0, 8); }

constexpr const char* kPreamble =
    "\\documentclass[a4paper,10pt]{article}\n"
    "\\usepackage[T1]{fontenc}\n"
    "\\usepackage[utf8]{inputenc}\n"
    "\\usepackage{lmodern}\n"
    "\\usepackage[margin=2cm]{geometry}\n"
    "\\usepackage{longtable}\n"
    "\\usepackage{array}\n"
    "\\setlength{\\parindent}{0pt}\n"
    "\\setlength{\\parskip}{4pt}\n"
    "\\setlength{\\tabcolsep}{3pt}\n"
    "\\begin{document}\n";

struct Snapshot {
  Case case_info;
  ReportSections sections;
  bool sections_readable = false;
  std::vector<EvidenceItem> items;
  std::vector<Note> notes;
  std::vector<CustodyEvent> events;
  std::map<std::string, std::string> usernames;
};

}  // namespace

std::string ReportGenerator::render_latex(const ReportSpec& spec, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, {Category::Case, spec.case_id.str()});

  std::vector<EvidenceId> selected;
  if (spec.selected_evidence.empty()) {
    ctx_.store.read([&](store::Database& db) {
      for (const auto& item : Vault::load_case(db, spec.case_id)) {
        if (ctx_.access.authorize(db, principal, Right::Read, {Category::Evidence, item.id.str()}) ==
            Decision::Allow) {
          selected.push_back(item.id);
        }
      }
    });
  } else {
    std::set<EvidenceId> seen;
    for (const auto& id : spec.selected_evidence) {
      if (!seen.insert(id).second) continue;
      ctx_.access.require(principal, Right::Read, {Category::Evidence, id.str()});
      selected.push_back(id);
    }
  }

  Snapshot snap = ctx_.store.read([&](store::Database& db) {
    Snapshot s;
    auto c = CaseService::load(db, spec.case_id);
    if (!c) fail(ErrorCode::UnknownCase, "unknown case " + spec.case_id.str());
    s.case_info = *c;
    s.sections_readable = ctx_.access.authorize(db, principal, Right::Read,
                                                {Category::ReportInfo, spec.case_id.str()}) == Decision::Allow;
    if (s.sections_readable) s.sections = CaseService::load_sections(db, spec.case_id);
    for (const auto& id : selected) {
      auto item = Vault::load_or_throw(db, id);
      if (item.case_id != spec.case_id) fail(ErrorCode::UnknownEvidence, "unknown evidence " + id.str());
      s.items.push_back(std::move(item));
    }
    s.notes = CaseService::load_notes(db, spec.case_id);
    std::set<std::uint64_t> seqs;
    for (const auto& id : selected) {
      for (auto& e : ctx_.ledger.for_evidence(db, id)) {
        if (seqs.insert(e.seq).second) s.events.push_back(std::move(e));
      }
    }
    std::sort(s.events.begin(), s.events.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
    auto st = db.prepare("SELECT id, username FROM principals");
    while (st.step()) s.usernames[st.text(0)] = st.text(1);
    return s;
  });

  for (const auto& [id, windows] : spec.excerpts) {
    auto it = std::find_if(snap.items.begin(), snap.items.end(), [&](const auto& e) { return e.id == id; });
    if (it == snap.items.end()) fail(ErrorCode::InvalidArgument, "excerpt given for unselected evidence " + id.str());
    for (const auto& w : windows) {
      if (w.length < 1 || w.length > kMaxExcerpt || w.offset > it->size_bytes ||
          w.length > it->size_bytes - w.offset) {
        fail(ErrorCode::RangeOutOfBounds, "excerpt [" + std::to_string(w.offset) + ", +" + std::to_string(w.length) +
                                              ") is outside '" + it->display_name + "'");
      }
    }
  }

  auto user = [&](const std::optional<PrincipalId>& id) -> std::string {
    if (!id) return "(system)";
    auto it = snap.usernames.find(id->str());
    return it == snap.usernames.end() ? id->str() : it->second;
  };

  std::ostringstream tex;
  tex << kPreamble;

  const auto& c = snap.case_info;
  tex << "\\begin{center}\n{\\LARGE Case Report}\\par\\medskip\n{\\large " << cell(c.details)
      << "}\\par\\medskip\nCase " << breakable_tt(c.id.str()) << "\n\\end{center}\n\n";
  std::string roster;
  for (std::size_t i = 0; i < c.investigators.size(); ++i) {
    if (i > 0) roster += ", ";
    roster += cell(user(c.investigators[i]));
  }
  tex << "\\begin{tabular}{>{\\bfseries}l p{12cm}}\n"
      << "Status & " << to_string(c.status) << "\\\\\n"
      << "Opened & " << c.created_at.iso8601() << "\\\\\n"
      << "Last modified & " << c.modified_at.iso8601() << "\\\\\n"
      << "Investigators & " << roster << "\\\\\n"
      << "\\end{tabular}\n\n";
  if (!c.description.empty()) tex << text_block(c.description) << "\n";

  auto section_notes = [&](ReportSection which) {
    if (!spec.include_notes || !snap.sections_readable) return;
    for (const auto& n : snap.notes) {
      if (n.target.section && *n.target.section == which) {
        tex << "\\emph{Note by " << cell(user(n.author)) << ", " << n.created_at.iso8601() << ":}\n\n"
            << text_block(n.body) << "\n";
      }
    }
  };

  tex << "\\section{Executive Summary}\n" << text_block(snap.sections.executive_summary) << "\n";
  section_notes(ReportSection::ExecutiveSummary);
  tex << "\\section{Introduction}\n" << text_block(snap.sections.introduction) << "\n";
  section_notes(ReportSection::Introduction);

  tex << "\\section{Evidence Listing}\n"
      << "{\\footnotesize\n"
      << "\\begin{longtable}{p{3.2cm} p{2.4cm} >{\\raggedleft\\arraybackslash}p{1.4cm} p{3.4cm} p{2.4cm} "
         "p{2.0cm}}\n"
      << "\\textbf{Name} & \\textbf{ID} & \\textbf{Size} & \\textbf{SHA-1} & \\textbf{Acquired} & "
         "\\textbf{By}\\\\\n\\hline\n\\endhead\n";
  for (const auto& e : snap.items) {
    tex << "\\relax " << cell(e.display_name) << " & " << breakable_tt(e.id.str()) << " & " << e.size_bytes << " & "
        << breakable_tt(e.sha1.hex) << " & " << timestamp_cell(e.acquired_at) << " & " << cell(user(e.acquired_by))
        << "\\\\\n";
  }
  tex << "\\end{longtable}\n}\n\n";

  if (spec.include_evidence_printout || spec.include_notes) {
    tex << "\\section{Evidence Details}\n";
    for (const auto& e : snap.items) {
      tex << "\\subsection{" << cell(e.display_name) << "}\n"
          << "\\begin{tabular}{>{\\bfseries}l p{13cm}}\n"
          << "ID & " << breakable_tt(e.id.str()) << "\\\\\n"
          << "Source & " << cell(e.source_description) << "\\\\\n"
          << "Size & " << e.size_bytes << " bytes\\\\\n"
          << "SHA-1 & " << breakable_tt(e.sha1.hex) << "\\\\\n"
          << "SHA-256 & " << breakable_tt(e.sha256.hex) << "\\\\\n"
          << "Status & " << to_string(e.status) << "\\\\\n";
      if (e.parent) {
        tex << "Derived & " << to_string(e.parent->relation) << " " << breakable_tt(e.parent->parent.str());
        if (e.parent->relation == Relation::ExtractedFrom) {
          tex << " at offset " << e.parent->offset << ", length " << e.parent->length;
        }
        tex << "\\\\\n";
      }
      tex << "\\end{tabular}\n\n";

      if (spec.include_evidence_printout) {
        std::vector<ExcerptWindow> windows;
        if (auto it = spec.excerpts.find(e.id); it != spec.excerpts.end() && !it->second.empty()) {
          windows = it->second;
        } else if (e.size_bytes > 0) {
          windows.push_back({0, std::min<std::uint64_t>(kDefaultExcerpt, e.size_bytes)});
        }
        if (windows.empty()) tex << "\\emph{(no content)}\n\n";
        for (const auto& w : windows) {
          auto bytes = vault_.blobs().read(e.sha1, w.offset, w.length);
          tex << "\\paragraph{Excerpt at offset " << w.offset << ", " << bytes.size() << " bytes}\n"
              << mono_block(viewer::render_hex(bytes, w.offset));
          if (looks_like_text(bytes)) {
            tex << "\\paragraph{As text}\n" << mono_block(viewer::render_ascii(bytes));
          }
          tex << "\n";
        }
      }
      if (spec.include_notes) {
        bool first = true;
        for (const auto& n : snap.notes) {
          if (!n.target.evidence || *n.target.evidence != e.id) continue;
          if (first) tex << "\\subsubsection*{Notes}\n";
          first = false;
          tex << "\\emph{" << cell(user(n.author)) << ", " << n.created_at.iso8601() << ":}\n\n"
              << text_block(n.body) << "\n";
        }
      }
    }
  }

  if (spec.include_custody_table) {
    tex << "\\section{Chain of Custody}\n"
        << "{\\footnotesize\n"
        << "\\begin{longtable}{>{\\raggedleft\\arraybackslash}p{0.8cm} p{2.5cm} p{2.0cm} p{2.6cm} p{1.5cm} "
           "p{6.4cm}}\n"
        << "\\textbf{Seq} & \\textbf{Timestamp} & \\textbf{Principal} & \\textbf{Operation} & "
           "\\textbf{Evidence} & \\textbf{Description}\\\\\n\\hline\n\\endhead\n";
    for (const auto& ev : snap.events) {
      std::string target = ev.evidence_id ? "\\texttt{" + short_id(ev.evidence_id->str()) + "}" : "";
      tex << "\\relax " << ev.seq << " & " << timestamp_cell(ev.timestamp) << " & " << cell(user(ev.principal))
          << " & " << cell(to_string(ev.kind)) << " & " << target << " & " << cell(ev.description) << "\\\\\n";
    }
    tex << "\\end{longtable}\n}\n\n";
  }

  tex << "\\section{Conclusion}\n" << text_block(snap.sections.conclusion) << "\n";
  section_notes(ReportSection::Conclusion);
  tex << "\\end{document}\n";
  return tex.str();
}

std::optional<fs::path> ReportGenerator::find_engine() const {
  return find_executable(config_.latex_engine.empty() ? std::string("pdflatex") : config_.latex_engine);
}

std::vector<std::uint8_t> ReportGenerator::compile_pdf(const std::string& latex) const {
  auto engine = find_engine();
  if (!engine) fail(ErrorCode::LatexEngineMissing, "no pdflatex-compatible engine found");
  auto dir = ctx_.repo.layout().work / ("report-" + random_id_hex());
  fs::create_directories(dir);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};
  {
    std::ofstream out(dir / "report.tex", std::ios::binary);
    out << latex;
  }
  std::vector<std::string> argv{engine->string(), "-interaction=nonstopmode", "-halt-on-error", "-no-shell-escape",
                                "report.tex"};
  for (int pass = 0; pass < 2; ++pass) {
    auto r = run_process(argv, dir, std::chrono::duration_cast<std::chrono::milliseconds>(config_.compile_timeout));
    if (r.timed_out || r.exit_status != 0) {
      std::ifstream log(dir / "report.log", std::ios::binary);
      std::stringstream buf;
      buf << log.rdbuf();
      auto text = buf.str();
      if (text.empty()) text.assign(r.out.begin(), r.out.end());
      if (text.size() > 2000) text = text.substr(text.size() - 2000);
      fail(ErrorCode::LatexCompileFailed, "LaTeX compilation failed:\n" + text);
    }
  }
  std::ifstream pdf(dir / "report.pdf", std::ios::binary);
  if (!pdf) fail(ErrorCode::LatexCompileFailed, "engine produced no PDF");
  return {std::istreambuf_iterator<char>(pdf), std::istreambuf_iterator<char>()};
}

ReportArtifact ReportGenerator::generate(const ReportSpec& spec, const PrincipalId& principal) {
  if (spec.output == ReportFormat::Pdf && !find_engine()) {
    fail(ErrorCode::LatexEngineMissing, "no pdflatex-compatible engine found");
  }
  auto latex = render_latex(spec, principal);
  ReportArtifact art;
  if (spec.output == ReportFormat::Pdf) {
    art.bytes = compile_pdf(latex);
    art.media_type = "application/pdf";
    art.file_name = "report-" + short_id(spec.case_id.str()) + ".pdf";
  } else {
    art.bytes.assign(latex.begin(), latex.end());
    art.media_type = "application/x-latex";
    art.file_name = "report-" + short_id(spec.case_id.str()) + ".tex";
  }
  auto digest = hash_bytes(art.bytes);
  std::size_t items = 0;
  {
    std::set<EvidenceId> distinct(spec.selected_evidence.begin(), spec.selected_evidence.end());
    items = distinct.size();
  }
  // content-addressed artifact file first, then the row and the event
  auto stored_path = ctx_.repo.layout().reports / (digest.sha256.hex + fs::path(art.file_name).extension().string());
  {
    std::error_code ec;
    if (!fs::exists(stored_path, ec)) {
      auto tmp = stored_path;
      tmp += ".part-" + random_id_hex();
      {
        std::ofstream out(tmp, std::ios::binary);
        out.write(reinterpret_cast<const char*>(art.bytes.data()), static_cast<std::streamsize>(art.bytes.size()));
        out.flush();
        if (!out) fail(ErrorCode::StorageFailure, "cannot write report artifact " + tmp.string());
      }
      fs::rename(tmp, stored_path, ec);
      if (ec) fail(ErrorCode::StorageFailure, "cannot store report artifact " + stored_path.string());
    }
  }
  auto event = ctx_.store.write([&](store::Database& db) {
    if (!CaseService::load(db, spec.case_id)) fail(ErrorCode::UnknownCase, "unknown case " + spec.case_id.str());
    EventDraft d{.principal = principal, .case_id = spec.case_id, .kind = EventKind::Report};
    d.description = "generated " + std::string(to_string(spec.output)) + " report (" +
                    (spec.selected_evidence.empty() ? std::string("all readable items")
                                                    : std::to_string(items) + " selected items") +
                    ", " + std::to_string(art.bytes.size()) + " bytes, sha256 " + digest.sha256.hex + ")";
    auto ev = ctx_.ledger.append(db, d);
    auto st = db.prepare(
        "INSERT INTO reports (event_seq, case_id, file_name, media_type, sha256, size_bytes) VALUES (?, ?, ?, ?, ?, ?)");
    st.bind(1, static_cast<std::int64_t>(ev.seq))
        .bind(2, spec.case_id.str())
        .bind(3, art.file_name)
        .bind(4, art.media_type)
        .bind(5, digest.sha256.hex)
        .bind(6, static_cast<std::int64_t>(art.bytes.size()));
    st.run();
    return ev;
  });
  art.event_seq = event.seq;
  return art;
}

namespace {

StoredReport row_to_report(const store::Statement& st) {
  StoredReport r;
  r.event_seq = static_cast<std::uint64_t>(st.integer(0));
  r.case_id = CaseId::parse(st.text(1));
  r.file_name = st.text(2);
  r.media_type = st.text(3);
  r.sha256 = st.text(4);
  r.size_bytes = static_cast<std::uint64_t>(st.integer(5));
  return r;
}

constexpr const char* kReportCols = "SELECT event_seq, case_id, file_name, media_type, sha256, size_bytes FROM reports ";

}  // namespace

std::vector<StoredReport> ReportGenerator::list(const CaseId& case_id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, {Category::Case, case_id.str()});
  return ctx_.store.read([&](store::Database& db) {
    std::vector<StoredReport> out;
    auto st = db.prepare(std::string(kReportCols) + "WHERE case_id = ? ORDER BY event_seq");
    st.bind(1, case_id.str());
    while (st.step()) out.push_back(row_to_report(st));
    return out;
  });
}

ReportArtifact ReportGenerator::download(std::uint64_t event_seq, const PrincipalId& principal) {
  auto found = ctx_.store.read([&](store::Database& db) -> std::optional<StoredReport> {
    auto st = db.prepare(std::string(kReportCols) + "WHERE event_seq = ?");
    st.bind(1, static_cast<std::int64_t>(event_seq));
    if (!st.step()) return std::nullopt;
    return row_to_report(st);
  });
  if (!found) fail(ErrorCode::UnknownObject, "unknown report " + std::to_string(event_seq));
  ctx_.access.require(principal, Right::Read, {Category::Case, found->case_id.str()});
  auto path = ctx_.repo.layout().reports / (found->sha256 + fs::path(found->file_name).extension().string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::StorageFailure, "report artifact missing: " + path.string());
  ReportArtifact art;
  art.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  auto digest = hash_bytes(art.bytes);
  if (digest.sha256.hex != found->sha256) fail(ErrorCode::IntegrityFailure, "report artifact does not match its digest");
  art.media_type = found->media_type;
  art.file_name = found->file_name;
  art.event_seq = found->event_seq;
  return art;
}

}  // namespace custodian
