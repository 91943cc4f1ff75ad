#include <doctest.h>

#include <fstream>
#include <sstream>

#include "custodian/fault.hpp"
#include "custodian/vault.hpp"
#include "harness.hpp"
#include "sha1_oracle.hpp"

using namespace custodian;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

void flip_byte(const std::filesystem::path& p, std::uint64_t offset) {
  std::filesystem::permissions(p, std::filesystem::perms::owner_write, std::filesystem::perm_options::add);
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char c = 0;
  f.get(c);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(static_cast<char>(c ^ 0x01));
}

std::int64_t count_rows(Engine& e, const std::string& sql) {
  return e.repo().store().read([&](store::Database& db) {
    auto st = db.prepare(sql);
    st.step();
    return st.integer(0);
  });
}

std::size_t count_blobs(const std::filesystem::path& root) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename().string().size() == 40) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("ingest records digests") {
  th::Env env;
  auto c = env.new_case();
  auto empty = env.ingest(c.id, {}, "null.bin");
  CHECK(empty.size_bytes == 0);
  CHECK(empty.sha1.hex == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(empty.sha1.hex == oracle::sha1_hex(std::string()));

  auto abc = env.ingest(c.id, bytes_of("abc"), "abc.bin");
  CHECK(abc.sha1.hex == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(abc.sha256.hex == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(abc.status == EvidenceStatus::Intact);

  std::istringstream stream("streamed content");
  auto s = env.e().vault().ingest(c.id, stream, "s.txt", "stdin", env.admin);
  CHECK(s.sha1.hex == oracle::sha1_hex(std::string("streamed content")));
}

TEST_CASE("ingest into an unknown case leaves the vault unchanged") {
  th::Env env;
  auto before = count_blobs(env.e().repo().layout().objects);
  auto events = env.e().ledger().size();
  CHECK_THROWS_WITH_AS(env.ingest(CaseId::generate(), bytes_of("x")), doctest::Contains("case"), Error);
  try {
    env.ingest(CaseId::generate(), bytes_of("x"));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownCase);
  }
  CHECK(count_blobs(env.e().repo().layout().objects) == before);
  CHECK(env.e().ledger().size() == events);
}

TEST_CASE("import with sidecar") {
  th::Env env;
  auto c = env.new_case();
  auto& v = env.e().vault();
  {
    std::istringstream f("abc");
    auto item = v.import_external(c.id, f, "a9993e364706816aba3e25717850c26c9cd0d89d  abc.bin", "abc.bin", env.admin);
    CHECK(item.sha1.hex == "a9993e364706816aba3e25717850c26c9cd0d89d");
  }
  {
    std::istringstream f("abc");
    auto item = v.import_external(c.id, f, "A9993E364706816ABA3E25717850C26C9CD0D89D *abc.bin\n", "abc2.bin", env.admin);
    CHECK(item.display_name == "abc2.bin");
  }
  auto rows = count_rows(env.e(), "SELECT COUNT(*) FROM evidence");
  {
    std::istringstream f("abc");
    try {
      (void)v.import_external(c.id, f, std::string(40, '0') + "  abc.bin", "zero.bin", env.admin);
      FAIL("expected mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DigestMismatch);
    }
  }
  {
    std::istringstream f("abc");
    try {
      (void)v.import_external(c.id, f, "not a digest", "bad.bin", env.admin);
      FAIL("expected unparseable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DigestUnparseable);
    }
  }
  CHECK(count_rows(env.e(), "SELECT COUNT(*) FROM evidence") == rows);
}

TEST_CASE("sidecar parsing") {
  auto d = std::string("a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(parse_sidecar(d) == d);
  CHECK(parse_sidecar(d + "\n") == d);
  CHECK(parse_sidecar(d + "  name with spaces.bin\nsecond line") == d);
  CHECK_FALSE(parse_sidecar("").has_value());
  CHECK_FALSE(parse_sidecar(d.substr(1)).has_value());
  CHECK_FALSE(parse_sidecar(d + "0").has_value());
  CHECK_FALSE(parse_sidecar("g" + d.substr(1)).has_value());
}

TEST_CASE("verify detects tampering") {
  th::Env env;
  auto c = env.new_case();
  auto item = env.ingest(c.id, bytes_of("tamper target"), "t.bin");
  auto other = env.ingest(c.id, bytes_of("bystander"), "b.bin");
  auto& v = env.e().vault();
  CHECK(v.verify(item.id, env.admin).outcome == VerifyOutcome::Intact);

  auto seq_before = env.e().ledger().size();
  flip_byte(v.blobs().path_for(item.sha1), 3);
  auto result = v.verify(item.id, env.admin);
  CHECK(result.outcome == VerifyOutcome::Corrupt);
  CHECK(result.event.kind == EventKind::CorruptionDetected);
  REQUIRE(result.event.caused_by_seq.has_value());
  CHECK(*result.event.caused_by_seq == seq_before);  // the intact VERIFY above
  CHECK(v.get(item.id, env.admin).status == EvidenceStatus::Corrupt);

  CHECK(v.verify(other.id, env.admin).outcome == VerifyOutcome::Intact);

  try {
    (void)v.clone_evidence(item.id, std::nullopt, env.admin);
    FAIL("clone of corrupt item");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SourceCorrupt);
  }
}

TEST_CASE("clone") {
  th::Env env;
  auto c = env.new_case();
  auto abc = env.ingest(c.id, bytes_of("abc"), "abc.bin");
  auto& v = env.e().vault();
  auto named = v.clone_evidence(abc.id, std::string("abc2.bin"), env.admin);
  CHECK(named.id != abc.id);
  CHECK(named.sha1 == abc.sha1);
  CHECK(named.display_name == "abc2.bin");
  REQUIRE(named.parent.has_value());
  CHECK(named.parent->relation == Relation::CloneOf);
  CHECK(named.parent->parent == abc.id);
  CHECK(v.verify(named.id, env.admin).outcome == VerifyOutcome::Intact);

  auto unnamed = v.clone_evidence(abc.id, std::nullopt, env.admin);
  CHECK(unnamed.display_name == "abc.bin (copy)");
}

TEST_CASE("extract") {
  th::Env env;
  auto c = env.new_case();
  auto abc = env.ingest(c.id, bytes_of("abc"), "abc.bin");
  auto& v = env.e().vault();
  auto whole = v.extract_region(abc.id, 0, 3, "whole", env.admin);
  CHECK(whole.sha1 == abc.sha1);
  auto b = v.extract_region(abc.id, 1, 1, "b", env.admin);
  CHECK(v.read_bytes(b.id, 0, 10, env.admin) == bytes_of("b"));
  CHECK(b.sha1.hex == oracle::sha1_hex(std::string("b")));
  REQUIRE(b.parent.has_value());
  CHECK(b.parent->relation == Relation::ExtractedFrom);
  CHECK(b.parent->offset == 1);
  CHECK(b.parent->length == 1);
  try {
    (void)v.extract_region(abc.id, 2, 5, "x", env.admin);
    FAIL("out of bounds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RangeOutOfBounds);
  }
}

TEST_CASE("read windows") {
  th::Env env;
  auto c = env.new_case();
  auto data = bytes_of("0123456789");
  auto item = env.ingest(c.id, data, "d.bin");
  auto& v = env.e().vault();
  CHECK(v.read_bytes(item.id, 0, data.size(), env.admin) == data);
  CHECK(v.get(item.id, env.admin).status == EvidenceStatus::Intact);
  CHECK(v.read_bytes(item.id, 9, 10, env.admin) == bytes_of("9"));
  try {
    (void)v.read_bytes(item.id, 10, 1, env.admin);
    FAIL("read at end");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RangeOutOfBounds);
  }
}

TEST_CASE("evidence is never deleted") {
  th::Env env;
  auto c = env.new_case();
  auto item = env.ingest(c.id, bytes_of("keep"), "k.bin");
  try {
    env.e().vault().delete_evidence(item.id, env.admin);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DeletionRefused);
  }
  CHECK(env.e().vault().get(item.id, env.admin).id == item.id);
}

TEST_CASE("failed ledger append keeps no evidence row") {
  th::Env env;
  auto c = env.new_case();
  auto rows = count_rows(env.e(), "SELECT COUNT(*) FROM evidence");
  auto events = env.e().ledger().size();
  arm_fault(FaultPoint::LedgerAppend, FaultAction::Throw);
  CHECK_THROWS(env.ingest(c.id, bytes_of("doomed"), "doomed.bin"));
  disarm_faults();
  CHECK(count_rows(env.e(), "SELECT COUNT(*) FROM evidence") == rows);
  CHECK(env.e().ledger().size() == events);
  CHECK(env.e().ledger().verify_chain().ok);
}
