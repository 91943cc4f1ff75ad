#include "custodian/store.hpp"

#include <sqlite3.h>

#include <array>
#include <thread>

#include "custodian/error.hpp"

namespace custodian::store {

namespace {

// Version 1: the full logical schema. custody_events is insert-only: the
// triggers make UPDATE and DELETE fail at the storage layer.
const char* const kSchemaV1 = R"sql(
CREATE TABLE principals (
  id TEXT PRIMARY KEY,
  username TEXT NOT NULL UNIQUE,
  display_name TEXT NOT NULL,
  role TEXT NOT NULL CHECK (role IN ('ADMINISTRATOR','INVESTIGATOR','AUDITOR')),
  salt BLOB NOT NULL,
  iterations INTEGER NOT NULL,
  credential BLOB NOT NULL,
  created_at TEXT NOT NULL
);

CREATE TABLE cases (
  id TEXT PRIMARY KEY,
  details TEXT NOT NULL,
  description TEXT NOT NULL,
  created_at TEXT NOT NULL,
  modified_at TEXT NOT NULL,
  status TEXT NOT NULL CHECK (status IN ('OPEN','CLOSED'))
);

CREATE TABLE case_investigators (
  case_id TEXT NOT NULL REFERENCES cases(id),
  principal_id TEXT NOT NULL REFERENCES principals(id),
  position INTEGER NOT NULL,
  PRIMARY KEY (case_id, principal_id)
);

CREATE TABLE evidence (
  id TEXT PRIMARY KEY,
  case_id TEXT NOT NULL REFERENCES cases(id),
  display_name TEXT NOT NULL,
  source_description TEXT NOT NULL,
  size_bytes INTEGER NOT NULL,
  sha1 TEXT NOT NULL,
  sha256 TEXT NOT NULL,
  acquired_at TEXT NOT NULL,
  acquired_by TEXT NOT NULL REFERENCES principals(id),
  parent_id TEXT REFERENCES evidence(id),
  relation TEXT CHECK (relation IN ('EXTRACTED_FROM','CLONE_OF','PRODUCED_BY_TOOL')),
  region_offset INTEGER,
  region_length INTEGER,
  status TEXT NOT NULL CHECK (status IN ('INTACT','CORRUPT'))
);
CREATE INDEX evidence_by_case ON evidence(case_id);

CREATE TABLE custody_events (
  seq INTEGER PRIMARY KEY,
  timestamp TEXT NOT NULL,
  timestamp_ms INTEGER NOT NULL,
  principal_id TEXT REFERENCES principals(id),
  case_id TEXT REFERENCES cases(id),
  evidence_id TEXT REFERENCES evidence(id),
  related_evidence_id TEXT REFERENCES evidence(id),
  kind TEXT NOT NULL,
  description TEXT NOT NULL,
  pre_digest TEXT,
  post_digest TEXT,
  caused_by_seq INTEGER REFERENCES custody_events(seq),
  chain_hash BLOB NOT NULL
);
CREATE INDEX events_by_evidence ON custody_events(evidence_id);
CREATE INDEX events_by_related ON custody_events(related_evidence_id);
CREATE TRIGGER custody_events_no_update BEFORE UPDATE ON custody_events
BEGIN SELECT RAISE(ABORT, 'custody events are append-only'); END;
CREATE TRIGGER custody_events_no_delete BEFORE DELETE ON custody_events
BEGIN SELECT RAISE(ABORT, 'custody events are append-only'); END;

CREATE TABLE acl_entries (
  principal_id TEXT NOT NULL REFERENCES principals(id),
  category TEXT NOT NULL CHECK (category IN ('CASE','EVIDENCE','REPORT_INFO')),
  object_id TEXT NOT NULL,
  right TEXT NOT NULL CHECK (right IN ('VIEW','READ','WRITE')),
  effect TEXT NOT NULL CHECK (effect IN ('ALLOW','DENY')),
  PRIMARY KEY (principal_id, category, object_id, right)
);

CREATE TABLE default_rights (
  scope TEXT NOT NULL,
  category TEXT NOT NULL CHECK (category IN ('CASE','EVIDENCE','REPORT_INFO')),
  right TEXT CHECK (right IN ('VIEW','READ','WRITE')),
  PRIMARY KEY (scope, category)
);
INSERT INTO default_rights VALUES
  ('ROLE:ADMINISTRATOR','CASE','WRITE'),
  ('ROLE:ADMINISTRATOR','EVIDENCE','WRITE'),
  ('ROLE:ADMINISTRATOR','REPORT_INFO','WRITE'),
  ('ROLE:INVESTIGATOR','CASE',NULL),
  ('ROLE:INVESTIGATOR','EVIDENCE','READ'),
  ('ROLE:INVESTIGATOR','REPORT_INFO',NULL),
  ('ROLE:AUDITOR','CASE','READ'),
  ('ROLE:AUDITOR','EVIDENCE','READ'),
  ('ROLE:AUDITOR','REPORT_INFO','VIEW'),
  ('CATEGORY','CASE',NULL),
  ('CATEGORY','EVIDENCE',NULL),
  ('CATEGORY','REPORT_INFO',NULL);

CREATE TABLE notes (
  id TEXT PRIMARY KEY,
  case_id TEXT NOT NULL REFERENCES cases(id),
  evidence_id TEXT REFERENCES evidence(id),
  section TEXT CHECK (section IN ('executive_summary','introduction','conclusion')),
  author TEXT NOT NULL REFERENCES principals(id),
  created_at TEXT NOT NULL,
  body TEXT NOT NULL,
  CHECK ((evidence_id IS NULL) <> (section IS NULL))
);
CREATE INDEX notes_by_case ON notes(case_id);

CREATE TABLE report_sections (
  case_id TEXT NOT NULL REFERENCES cases(id),
  section TEXT NOT NULL CHECK (section IN ('executive_summary','introduction','conclusion')),
  body TEXT NOT NULL,
  PRIMARY KEY (case_id, section)
);

CREATE TABLE plugin_defaults (
  plugin_id TEXT NOT NULL,
  name TEXT NOT NULL,
  value_json TEXT NOT NULL,
  PRIMARY KEY (plugin_id, name)
);

CREATE TABLE invocations (
  id TEXT PRIMARY KEY,
  plugin_id TEXT NOT NULL,
  plugin_version TEXT NOT NULL,
  case_id TEXT NOT NULL REFERENCES cases(id),
  principal_id TEXT NOT NULL REFERENCES principals(id),
  params_json TEXT NOT NULL,
  targets_json TEXT NOT NULL,
  argv_json TEXT NOT NULL,
  started_at TEXT NOT NULL,
  finished_at TEXT NOT NULL,
  exit_status INTEGER NOT NULL,
  stdout_evidence TEXT REFERENCES evidence(id),
  stderr BLOB NOT NULL,
  outcome TEXT NOT NULL CHECK (outcome IN ('OK','TOOL_FAILED','TIMEOUT'))
);

CREATE TABLE reports (
  event_seq INTEGER PRIMARY KEY REFERENCES custody_events(seq),
  case_id TEXT NOT NULL REFERENCES cases(id),
  file_name TEXT NOT NULL,
  media_type TEXT NOT NULL,
  sha256 TEXT NOT NULL,
  size_bytes INTEGER NOT NULL
);
)sql";

const std::array<Migration, 1> kBuiltin = {{{1, kSchemaV1}}};

thread_local const Store* t_writing = nullptr;

int read_user_version(Database& db) {
  auto st = db.prepare("PRAGMA user_version");
  st.step();
  return static_cast<int>(st.integer(0));
}

}  // namespace

std::span<const Migration> builtin_migrations() { return kBuiltin; }

Store::Store(std::filesystem::path path, Database writer, int version)
    : path_(std::move(path)), writer_(std::move(writer)), version_(version) {}

Store::~Store() = default;

std::unique_ptr<Store> Store::open(const std::filesystem::path& db_path,
                                   std::span<const Migration> migrations) {
  Database db = Database::open(db_path, false);
  db.exec("PRAGMA journal_mode = WAL");
  db.exec("PRAGMA synchronous = FULL");

  int latest = 0;
  for (const auto& m : migrations) latest = std::max(latest, m.version);
  int current = read_user_version(db);
  if (current > latest) {
    fail(ErrorCode::IncompatibleVersion, "repository schema v" + std::to_string(current) +
                                             " is newer than this engine (v" +
                                             std::to_string(latest) + ")");
  }
  if (current < latest) {
    db.exec("BEGIN IMMEDIATE");
    try {
      for (const auto& m : migrations) {
        if (m.version <= current) continue;
        db.exec(m.sql);
        db.exec("PRAGMA user_version = " + std::to_string(m.version));
      }
      db.exec("COMMIT");
    } catch (...) {
      db.exec("ROLLBACK");
      throw;
    }
  }
  int version = read_user_version(db);
  return std::unique_ptr<Store>(new Store(db_path, std::move(db), version));
}

bool Store::in_write_transaction() const noexcept { return t_writing == this; }

void Store::begin_write() {
  writer_.exec("BEGIN IMMEDIATE");
  t_writing = this;
}

void Store::commit_write() {
  writer_.exec("COMMIT");
  t_writing = nullptr;
}

void Store::rollback_write() noexcept {
  t_writing = nullptr;
  if (sqlite3_get_autocommit(writer_.raw()) == 0) {
    sqlite3_exec(writer_.raw(), "ROLLBACK", nullptr, nullptr, nullptr);
  }
}

Store::ReadLease Store::lease() const {
  {
    std::lock_guard lock(pool_mu_);
    if (!pool_.empty()) {
      auto db = std::move(pool_.back());
      pool_.pop_back();
      return ReadLease(*this, std::move(db));
    }
  }
  return ReadLease(*this, std::make_unique<Database>(Database::open(path_, true)));
}

Store::ReadLease::~ReadLease() {
  if (!db_) return;
  std::lock_guard lock(store_.pool_mu_);
  if (store_.pool_.size() < 8) store_.pool_.push_back(std::move(db_));
}

}  // namespace custodian::store
