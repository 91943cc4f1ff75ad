#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "custodian/context.hpp"
#include "custodian/digest.hpp"
#include "custodian/model.hpp"

namespace custodian {

// Write-once content-addressed blob storage: objects/<first 2 hex>/<sha1 hex>.
class BlobStore {
 public:
  explicit BlobStore(std::filesystem::path objects_dir);

  // Bytes written to a temp file and hashed, not yet visible under their
  // content address.
  struct Staged {
    std::filesystem::path temp;
    DigestValue sha1;
    DigestValue sha256;
    std::uint64_t size = 0;
  };

  Staged stage(std::istream& in) const;
  Staged stage(std::span<const std::uint8_t> bytes) const;
  // Moves a staged blob into place (a no-op rename when the content already
  // exists) and returns the final path.
  std::filesystem::path commit(const Staged& staged) const;
  void discard(const Staged& staged) const noexcept;

  [[nodiscard]] std::filesystem::path path_for(const DigestValue& sha1) const;
  [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

  // Reads [offset, offset+length) clipped at end of blob.
  [[nodiscard]] std::vector<std::uint8_t> read(const DigestValue& sha1, std::uint64_t offset,
                                               std::uint64_t length) const;
  // nullopt when the blob is missing.
  [[nodiscard]] std::optional<DualHasher::Result> rehash(const DigestValue& sha1) const;

 private:
  std::filesystem::path root_;
};

// Parses a digest sidecar: first line holds either a bare 40-hex digest or
// "<40-hex>  <name>" / "<40-hex> *<name>". Returns the lowercase digest.
std::optional<std::string> parse_sidecar(std::string_view text);

enum class VerifyOutcome { Intact, Corrupt };
std::string_view to_string(VerifyOutcome v) noexcept;

struct VerifyResult {
  VerifyOutcome outcome = VerifyOutcome::Intact;
  CustodyEvent event;
};

class Vault {
 public:
  static constexpr std::uint64_t kMaxReadWindow = 1u << 20;

  Vault(Context ctx, BlobStore blobs) : ctx_(ctx), blobs_(std::move(blobs)) {}

  EvidenceItem ingest(const CaseId& case_id, std::istream& content, const std::string& display_name,
                      const std::string& source_description, const PrincipalId& principal);
  EvidenceItem ingest(const CaseId& case_id, std::span<const std::uint8_t> content,
                      const std::string& display_name, const std::string& source_description,
                      const PrincipalId& principal);
  EvidenceItem import_external(const CaseId& case_id, std::istream& file, const std::string& digest_sidecar,
                               const std::string& display_name, const PrincipalId& principal);

  VerifyResult verify(const EvidenceId& id, const PrincipalId& principal,
                      std::optional<std::uint64_t> caused_by = std::nullopt);
  EvidenceItem clone_evidence(const EvidenceId& id, const std::optional<std::string>& new_name,
                              const PrincipalId& principal);
  EvidenceItem extract_region(const EvidenceId& id, std::uint64_t offset, std::uint64_t length,
                              const std::string& new_name, const PrincipalId& principal);
  [[nodiscard]] std::vector<std::uint8_t> read_bytes(const EvidenceId& id, std::uint64_t offset,
                                                     std::uint64_t length, const PrincipalId& principal);
  [[nodiscard]] EvidenceItem get(const EvidenceId& id, const PrincipalId& principal);
  [[nodiscard]] std::vector<CustodyEvent> events(const EvidenceId& id, const PrincipalId& principal);
  [[noreturn]] void delete_evidence(const EvidenceId& id, const PrincipalId& principal);

  // ---- internal surface for other services ----------------------------

  [[nodiscard]] const BlobStore& blobs() const noexcept { return blobs_; }

  static std::optional<EvidenceItem> load(store::Database& db, const EvidenceId& id);
  static EvidenceItem load_or_throw(store::Database& db, const EvidenceId& id);
  static std::vector<EvidenceItem> load_case(store::Database& db, const CaseId& case_id);

  struct NewItem {
    CaseId case_id;
    std::string display_name;
    std::string source_description;
    PrincipalId acquired_by;
    std::optional<ParentLink> parent;
  };
  // Inserts the metadata row for a committed blob and grants every case
  // investigator WRITE on it; the caller appends the ledger event.
  EvidenceItem insert_item(store::Database& db, const NewItem& item, const BlobStore::Staged& blob);

  // Re-hash and record VERIFY / CORRUPTION_DETECTED. Caller holds the case lock.
  VerifyResult verify_locked(const EvidenceItem& item, const PrincipalId& principal,
                             std::optional<std::uint64_t> caused_by);

  // No vault path may be handed to external tools.
  [[nodiscard]] bool inside_vault(const std::string& token) const;

 private:
  Context ctx_;
  BlobStore blobs_;
};

}  // namespace custodian
