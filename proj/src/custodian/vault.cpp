#include "custodian/vault.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "custodian/cases.hpp"
#include "custodian/fault.hpp"
#include "custodian/hex.hpp"

namespace custodian {

namespace fs = std::filesystem;

namespace {

class FileDescriptor {
 public:
  explicit FileDescriptor(int fd) : fd_(fd) {}
  ~FileDescriptor() {
    if (fd_ >= 0) ::close(fd_);
  }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  [[nodiscard]] int get() const noexcept { return fd_; }
  int release() noexcept { return std::exchange(fd_, -1); }

 private:
  int fd_;
};

[[noreturn]] void io_fail(const std::string& what, const fs::path& p) {
  fail(ErrorCode::StorageFailure, what + " " + p.string() + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* data, std::size_t n, const fs::path& p) {
  while (n > 0) {
    ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      io_fail("write", p);
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

void fsync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

template <class Feed>
BlobStore::Staged stage_with(const fs::path& root, Feed&& feed) {
  BlobStore::Staged s;
  s.temp = root / "tmp" / (random_id_hex() + ".part");
  FileDescriptor fd(::open(s.temp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600));
  if (fd.get() < 0) io_fail("create", s.temp);
  DualHasher hasher;
  try {
    feed([&](const std::uint8_t* data, std::size_t n) {
      write_all(fd.get(), data, n, s.temp);
      hasher.update(std::span(data, n));
      s.size += n;
    });
    if (::fsync(fd.get()) != 0) io_fail("fsync", s.temp);
    if (::close(fd.release()) != 0) io_fail("close", s.temp);
  } catch (...) {
    std::error_code ec;
    fs::remove(s.temp, ec);
    throw;
  }
  auto digests = hasher.finish();
  s.sha1 = digests.sha1;
  s.sha256 = digests.sha256;
  return s;
}

}  // namespace

BlobStore::BlobStore(fs::path objects_dir) : root_(std::move(objects_dir)) {
  fs::create_directories(root_ / "tmp");
}

fs::path BlobStore::path_for(const DigestValue& sha1) const {
  return root_ / sha1.hex.substr(0, 2) / sha1.hex;
}

BlobStore::Staged BlobStore::stage(std::istream& in) const {
  return stage_with(root_, [&](auto&& sink) {
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      auto got = static_cast<std::size_t>(in.gcount());
      if (got > 0) sink(reinterpret_cast<const std::uint8_t*>(buf.data()), got);
    }
    if (in.bad()) fail(ErrorCode::StorageFailure, "read error on evidence source stream");
  });
}

BlobStore::Staged BlobStore::stage(std::span<const std::uint8_t> bytes) const {
  return stage_with(root_, [&](auto&& sink) {
    if (!bytes.empty()) sink(bytes.data(), bytes.size());
  });
}

fs::path BlobStore::commit(const Staged& staged) const {
  fault_hook(FaultPoint::BlobTempWritten);
  auto target = path_for(staged.sha1);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) fail(ErrorCode::StorageFailure, "cannot create " + target.parent_path().string());
  if (fs::exists(target, ec)) {
    // identical content already stored; blobs are never overwritten
    discard(staged);
  } else {
    ::chmod(staged.temp.c_str(), 0444);
    if (::rename(staged.temp.c_str(), target.c_str()) != 0) io_fail("rename", target);
    fsync_dir(target.parent_path());
  }
  fault_hook(FaultPoint::BlobStored);
  return target;
}

void BlobStore::discard(const Staged& staged) const noexcept {
  std::error_code ec;
  fs::remove(staged.temp, ec);
}

std::vector<std::uint8_t> BlobStore::read(const DigestValue& sha1, std::uint64_t offset,
                                          std::uint64_t length) const {
  auto p = path_for(sha1);
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::StorageFailure, "blob missing: " + p.string());
  in.seekg(0, std::ios::end);
  auto size = static_cast<std::uint64_t>(in.tellg());
  if (offset >= size) return {};
  auto n = std::min(length, size - offset);
  std::vector<std::uint8_t> out(n);
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
  out.resize(static_cast<std::size_t>(in.gcount()));
  return out;
}

std::optional<DualHasher::Result> BlobStore::rehash(const DigestValue& sha1) const {
  auto p = path_for(sha1);
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  try {
    return hash_file(p);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<std::string> parse_sidecar(std::string_view text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);  // UTF-8 BOM
  }
  auto eol = text.find('\n');
  std::string_view line = text.substr(0, eol);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.size() < 40) return std::nullopt;
  std::string digest;
  for (char c : line.substr(0, 40)) {
    if (c >= '0' && c <= '9') {
      digest.push_back(c);
    } else if (c >= 'a' && c <= 'f') {
      digest.push_back(c);
    } else if (c >= 'A' && c <= 'F') {
      digest.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      return std::nullopt;
    }
  }
  auto rest = line.substr(40);
  if (rest.empty()) return digest;
  // "<hex>  <name>" or "<hex> *<name>"
  if (rest.size() >= 3 && (rest.substr(0, 2) == "  " || rest.substr(0, 2) == " *")) return digest;
  return std::nullopt;
}

std::string_view to_string(VerifyOutcome v) noexcept {
  return v == VerifyOutcome::Intact ? "INTACT" : "CORRUPT";
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kEvidenceCols =
    "SELECT id, case_id, display_name, source_description, size_bytes, sha1, sha256, acquired_at, acquired_by, "
    "parent_id, relation, region_offset, region_length, status FROM evidence ";

EvidenceItem row_to_item(const store::Statement& st) {
  EvidenceItem e;
  e.id = EvidenceId::parse(st.text(0));
  e.case_id = CaseId::parse(st.text(1));
  e.display_name = st.text(2);
  e.source_description = st.text(3);
  e.size_bytes = static_cast<std::uint64_t>(st.integer(4));
  e.sha1 = DigestValue::sha1(st.text(5));
  e.sha256 = DigestValue::sha256(st.text(6));
  e.acquired_at = Timestamp::parse(st.text(7)).value_or(Timestamp{});
  e.acquired_by = PrincipalId::parse(st.text(8));
  if (auto parent = st.optional_text(9)) {
    ParentLink link;
    link.parent = EvidenceId::parse(*parent);
    link.relation = parse_relation(st.text(10));
    link.offset = static_cast<std::uint64_t>(st.optional_integer(11).value_or(0));
    link.length = static_cast<std::uint64_t>(st.optional_integer(12).value_or(0));
    e.parent = link;
  }
  e.status = parse_evidence_status(st.text(13));
  return e;
}

ObjectRef evidence_ref(const EvidenceId& id) { return {Category::Evidence, id.str()}; }
ObjectRef case_ref(const CaseId& id) { return {Category::Case, id.str()}; }

}  // namespace

std::optional<EvidenceItem> Vault::load(store::Database& db, const EvidenceId& id) {
  auto st = db.prepare(std::string(kEvidenceCols) + "WHERE id = ?");
  st.bind(1, id.str());
  if (!st.step()) return std::nullopt;
  return row_to_item(st);
}

EvidenceItem Vault::load_or_throw(store::Database& db, const EvidenceId& id) {
  auto item = load(db, id);
  if (!item) fail(ErrorCode::UnknownEvidence, "unknown evidence " + id.str());
  return *item;
}

std::vector<EvidenceItem> Vault::load_case(store::Database& db, const CaseId& case_id) {
  std::vector<EvidenceItem> out;
  auto st = db.prepare(std::string(kEvidenceCols) + "WHERE case_id = ? ORDER BY rowid");
  st.bind(1, case_id.str());
  while (st.step()) out.push_back(row_to_item(st));
  return out;
}

EvidenceItem Vault::insert_item(store::Database& db, const NewItem& item, const BlobStore::Staged& blob) {
  EvidenceItem e;
  e.id = EvidenceId::generate();
  e.case_id = item.case_id;
  e.display_name = item.display_name;
  e.source_description = item.source_description;
  e.size_bytes = blob.size;
  e.sha1 = blob.sha1;
  e.sha256 = blob.sha256;
  e.acquired_at = ctx_.clock.now();
  e.acquired_by = item.acquired_by;
  e.parent = item.parent;
  e.status = EvidenceStatus::Intact;

  if (e.parent) {
    auto parent = load(db, e.parent->parent);
    if (!parent || parent->case_id != e.case_id) {
      fail(ErrorCode::ReferentialFailure, "parent evidence must exist in the same case");
    }
  }

  auto ins = db.prepare(
      "INSERT INTO evidence (id, case_id, display_name, source_description, size_bytes, sha1, sha256, acquired_at, "
      "acquired_by, parent_id, relation, region_offset, region_length, status) "
      "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, 'INTACT')");
  ins.bind(1, e.id.str())
      .bind(2, e.case_id.str())
      .bind(3, e.display_name)
      .bind(4, e.source_description)
      .bind(5, static_cast<std::int64_t>(e.size_bytes))
      .bind(6, e.sha1.hex)
      .bind(7, e.sha256.hex)
      .bind(8, e.acquired_at.iso8601())
      .bind(9, e.acquired_by.str());
  if (e.parent) {
    ins.bind(10, e.parent->parent.str()).bind(11, to_string(e.parent->relation));
    if (e.parent->relation == Relation::ExtractedFrom) {
      ins.bind(12, static_cast<std::int64_t>(e.parent->offset)).bind(13, static_cast<std::int64_t>(e.parent->length));
    } else {
      ins.bind(12, std::nullopt).bind(13, std::nullopt);
    }
  } else {
    ins.bind(10, std::nullopt).bind(11, std::nullopt).bind(12, std::nullopt).bind(13, std::nullopt);
  }
  ins.run();

  auto roster = db.prepare("SELECT principal_id FROM case_investigators WHERE case_id = ?");
  roster.bind(1, e.case_id.str());
  while (roster.step()) {
    ctx_.access.put_entry(db, {PrincipalId::parse(roster.text(0)), evidence_ref(e.id), Right::Write, Effect::Allow});
  }
  CaseService::touch(db, e.case_id, e.acquired_at);
  return e;
}

EvidenceItem Vault::ingest(const CaseId& case_id, std::istream& content, const std::string& display_name,
                           const std::string& source_description, const PrincipalId& principal) {
  if (display_name.empty()) fail(ErrorCode::InvalidArgument, "display name must be non-empty");
  ctx_.access.require(principal, Right::Write, case_ref(case_id));
  CaseGuard guard(ctx_.locks, case_id);
  ctx_.store.read([&](store::Database& db) { CaseService::require_open(db, case_id); });

  auto staged = blobs_.stage(content);
  blobs_.commit(staged);
  return ctx_.store.write([&](store::Database& db) {
    CaseService::require_open(db, case_id);
    auto item = insert_item(db, {case_id, display_name, source_description, principal, std::nullopt}, staged);
    ctx_.ledger.append(db, EventDraft{.principal = principal,
                                      .case_id = case_id,
                                      .evidence_id = item.id,
                                      .kind = EventKind::Acquire,
                                      .description = "acquired '" + display_name + "' (" +
                                                     std::to_string(item.size_bytes) + " bytes) from " +
                                                     source_description,
                                      .post_digest = item.sha1});
    return item;
  });
}

EvidenceItem Vault::ingest(const CaseId& case_id, std::span<const std::uint8_t> content,
                           const std::string& display_name, const std::string& source_description,
                           const PrincipalId& principal) {
  std::string copy(reinterpret_cast<const char*>(content.data()), content.size());
  std::istringstream in(std::move(copy));
  return ingest(case_id, in, display_name, source_description, principal);
}

EvidenceItem Vault::import_external(const CaseId& case_id, std::istream& file, const std::string& digest_sidecar,
                                    const std::string& display_name, const PrincipalId& principal) {
  auto expected = parse_sidecar(digest_sidecar);
  if (!expected) fail(ErrorCode::DigestUnparseable, "digest sidecar does not contain a SHA-1 digest");
  if (display_name.empty()) fail(ErrorCode::InvalidArgument, "display name must be non-empty");
  ctx_.access.require(principal, Right::Write, case_ref(case_id));
  CaseGuard guard(ctx_.locks, case_id);
  ctx_.store.read([&](store::Database& db) { CaseService::require_open(db, case_id); });

  auto staged = blobs_.stage(file);
  if (staged.sha1.hex != *expected) {
    blobs_.discard(staged);
    fail(ErrorCode::DigestMismatch,
         "sidecar digest " + *expected + " does not match content digest " + staged.sha1.hex);
  }
  blobs_.commit(staged);
  return ctx_.store.write([&](store::Database& db) {
    CaseService::require_open(db, case_id);
    auto item = insert_item(
        db, {case_id, display_name, "external import (sidecar sha1 " + *expected + ")", principal, std::nullopt},
        staged);
    ctx_.ledger.append(db, EventDraft{.principal = principal,
                                      .case_id = case_id,
                                      .evidence_id = item.id,
                                      .kind = EventKind::Import,
                                      .description = "imported '" + display_name + "' (" +
                                                     std::to_string(item.size_bytes) +
                                                     " bytes); sidecar digest matched",
                                      .pre_digest = DigestValue::sha1(*expected),
                                      .post_digest = item.sha1});
    return item;
  });
}

VerifyResult Vault::verify_locked(const EvidenceItem& item, const PrincipalId& principal,
                                  std::optional<std::uint64_t> caused_by) {
  auto actual = blobs_.rehash(item.sha1);
  const bool intact = actual && actual->sha1 == item.sha1 && actual->sha256 == item.sha256;
  return ctx_.store.write([&](store::Database& db) {
    VerifyResult r;
    EventDraft d{.principal = principal, .case_id = item.case_id, .evidence_id = item.id, .pre_digest = item.sha1};
    if (actual) d.post_digest = actual->sha1;
    if (intact) {
      r.outcome = VerifyOutcome::Intact;
      d.kind = EventKind::Verify;
      d.description = "integrity verified";
    } else {
      r.outcome = VerifyOutcome::Corrupt;
      auto blamed = caused_by ? caused_by : ctx_.ledger.latest_seq_for(db, item.id);
      d.kind = EventKind::CorruptionDetected;
      d.caused_by_seq = blamed;
      d.description = actual ? "digest mismatch: stored content no longer matches recorded sha1"
                             : "stored content missing";
      if (blamed) d.description += "; attributed to event " + std::to_string(*blamed);
      auto st = db.prepare("UPDATE evidence SET status = 'CORRUPT' WHERE id = ?");
      st.bind(1, item.id.str());
      st.run();
    }
    r.event = ctx_.ledger.append(db, d);
    return r;
  });
}

VerifyResult Vault::verify(const EvidenceId& id, const PrincipalId& principal, std::optional<std::uint64_t> caused_by) {
  ctx_.access.require(principal, Right::Read, evidence_ref(id));
  auto item = ctx_.store.read([&](store::Database& db) { return load_or_throw(db, id); });
  CaseGuard guard(ctx_.locks, item.case_id);
  return verify_locked(item, principal, caused_by);
}

EvidenceItem Vault::clone_evidence(const EvidenceId& id, const std::optional<std::string>& new_name,
                                   const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, evidence_ref(id));
  auto source = ctx_.store.read([&](store::Database& db) { return load_or_throw(db, id); });
  ctx_.access.require(principal, Right::Write, case_ref(source.case_id));
  CaseGuard guard(ctx_.locks, source.case_id);

  EvidenceItem clone = ctx_.store.write([&](store::Database& db) {
    CaseService::require_open(db, source.case_id);
    auto current = load_or_throw(db, id);
    if (current.status != EvidenceStatus::Intact) fail(ErrorCode::SourceCorrupt, "source evidence is CORRUPT");
    BlobStore::Staged same{{}, current.sha1, current.sha256, current.size_bytes};
    std::string name = new_name && !new_name->empty() ? *new_name : current.display_name + " (copy)";
    auto item = insert_item(db,
                            {current.case_id, name, current.source_description, principal,
                             ParentLink{current.id, Relation::CloneOf, 0, 0}},
                            same);
    ctx_.ledger.append(db, EventDraft{.principal = principal,
                                      .case_id = current.case_id,
                                      .evidence_id = item.id,
                                      .related_evidence_id = current.id,
                                      .kind = EventKind::Clone,
                                      .description = "cloned '" + current.display_name + "' as '" + name + "'",
                                      .pre_digest = current.sha1,
                                      .post_digest = item.sha1});
    return item;
  });
  verify_locked(clone, principal, std::nullopt);
  return ctx_.store.read([&](store::Database& db) { return load_or_throw(db, clone.id); });
}

EvidenceItem Vault::extract_region(const EvidenceId& id, std::uint64_t offset, std::uint64_t length,
                                   const std::string& new_name, const PrincipalId& principal) {
  if (new_name.empty()) fail(ErrorCode::InvalidArgument, "display name must be non-empty");
  ctx_.access.require(principal, Right::Read, evidence_ref(id));
  auto source = ctx_.store.read([&](store::Database& db) { return load_or_throw(db, id); });
  ctx_.access.require(principal, Right::Write, case_ref(source.case_id));
  CaseGuard guard(ctx_.locks, source.case_id);
  source = ctx_.store.read([&](store::Database& db) {
    CaseService::require_open(db, source.case_id);
    return load_or_throw(db, id);
  });
  if (source.status != EvidenceStatus::Intact) fail(ErrorCode::SourceCorrupt, "source evidence is CORRUPT");
  if (length < 1 || offset > source.size_bytes || length > source.size_bytes - offset) {
    fail(ErrorCode::RangeOutOfBounds, "region [" + std::to_string(offset) + ", +" + std::to_string(length) +
                                          ") exceeds evidence size " + std::to_string(source.size_bytes));
  }
  auto bytes = blobs_.read(source.sha1, offset, length);
  if (bytes.size() != length) fail(ErrorCode::StorageFailure, "short read from source blob");
  auto staged = blobs_.stage(bytes);
  blobs_.commit(staged);
  EvidenceItem child = ctx_.store.write([&](store::Database& db) {
    auto item = insert_item(db,
                            {source.case_id, new_name,
                             "extracted from '" + source.display_name + "' at offset " + std::to_string(offset) +
                                 ", length " + std::to_string(length),
                             principal, ParentLink{source.id, Relation::ExtractedFrom, offset, length}},
                            staged);
    ctx_.ledger.append(db, EventDraft{.principal = principal,
                                      .case_id = source.case_id,
                                      .evidence_id = item.id,
                                      .related_evidence_id = source.id,
                                      .kind = EventKind::Extract,
                                      .description = "extracted [" + std::to_string(offset) + ", +" +
                                                     std::to_string(length) + ") of '" + source.display_name +
                                                     "' as '" + new_name + "'",
                                      .pre_digest = source.sha1,
                                      .post_digest = item.sha1});
    return item;
  });
  verify_locked(child, principal, std::nullopt);
  return ctx_.store.read([&](store::Database& db) { return load_or_throw(db, child.id); });
}

std::vector<std::uint8_t> Vault::read_bytes(const EvidenceId& id, std::uint64_t offset, std::uint64_t length,
                                            const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, evidence_ref(id));
  auto item = ctx_.store.read([&](store::Database& db) { return load_or_throw(db, id); });
  if (offset >= item.size_bytes && !(offset == 0 && item.size_bytes == 0)) {
    fail(ErrorCode::RangeOutOfBounds,
         "offset " + std::to_string(offset) + " is beyond the end of a " + std::to_string(item.size_bytes) +
             "-byte item");
  }
  return blobs_.read(item.sha1, offset, std::min(length, kMaxReadWindow));
}

EvidenceItem Vault::get(const EvidenceId& id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::View, evidence_ref(id));
  return ctx_.store.read([&](store::Database& db) { return load_or_throw(db, id); });
}

std::vector<CustodyEvent> Vault::events(const EvidenceId& id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, evidence_ref(id));
  return ctx_.ledger.for_evidence(id);
}

void Vault::delete_evidence(const EvidenceId& id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::View, evidence_ref(id));
  fail(ErrorCode::DeletionRefused, "evidence is never deleted; chain of custody is preserved");
}

bool Vault::inside_vault(const std::string& token) const {
  auto root = blobs_.root().string();
  return token.find(root) != std::string::npos;
}

}  // namespace custodian
