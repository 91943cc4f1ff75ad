#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "custodian/context.hpp"
#include "custodian/model.hpp"
#include "custodian/vault.hpp"

namespace custodian {

// Replaces \ { } $ & # ^ _ % ~ with their LaTeX-safe forms; every other
// character passes through unchanged.
std::string escape_latex(std::string_view text);

enum class ReportFormat { Latex, Pdf };
std::string_view to_string(ReportFormat f) noexcept;
ReportFormat parse_report_format(std::string_view s);

struct ExcerptWindow {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

struct ReportSpec {
  CaseId case_id;
  // Empty selects every item of the case the principal may read.
  std::vector<EvidenceId> selected_evidence;
  // Items without an entry get one window over their first kDefaultExcerpt bytes.
  std::map<EvidenceId, std::vector<ExcerptWindow>> excerpts;
  bool include_notes = true;
  bool include_custody_table = true;
  bool include_evidence_printout = true;
  ReportFormat output = ReportFormat::Latex;
};

struct ReportArtifact {
  std::vector<std::uint8_t> bytes;
  std::string media_type;
  std::string file_name;
  std::uint64_t event_seq = 0;  // the REPORT event
};

struct StoredReport {
  std::uint64_t event_seq = 0;
  CaseId case_id;
  std::string file_name;
  std::string media_type;
  std::string sha256;
  std::uint64_t size_bytes = 0;
};

struct ReportConfig {
  // pdflatex-compatible engine; looked up on PATH when empty.
  std::string latex_engine;
  std::chrono::seconds compile_timeout{120};
};

class ReportGenerator {
 public:
  static constexpr std::uint64_t kDefaultExcerpt = 256;
  static constexpr std::uint64_t kMaxExcerpt = 64 * 1024;

  ReportGenerator(Context ctx, Vault& vault, ReportConfig config) : ctx_(ctx), vault_(vault), config_(config) {}

  ReportArtifact generate(const ReportSpec& spec, const PrincipalId& principal);

  // The LaTeX source alone; checks access but appends no event.
  std::string render_latex(const ReportSpec& spec, const PrincipalId& principal);

  // Previously generated artifacts; READ on the case required.
  [[nodiscard]] std::vector<StoredReport> list(const CaseId& case_id, const PrincipalId& principal);
  [[nodiscard]] ReportArtifact download(std::uint64_t event_seq, const PrincipalId& principal);

  // nullopt when no engine is configured or found.
  [[nodiscard]] std::optional<std::filesystem::path> find_engine() const;

  // Runs the engine twice over the source; LATEX_COMPILE_FAILED carries the log tail.
  [[nodiscard]] std::vector<std::uint8_t> compile_pdf(const std::string& latex) const;

 private:
  Context ctx_;
  Vault& vault_;
  ReportConfig config_;
};

}  // namespace custodian
