#include <doctest.h>

#include "custodian/reports.hpp"
#include "harness.hpp"
#include "oracles.hpp"

using namespace custodian;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

std::string text_of(const ReportArtifact& a) { return {a.bytes.begin(), a.bytes.end()}; }

}  // namespace

TEST_CASE("escaping") {
  CHECK(escape_latex("100% done") == "100\\% done");
  CHECK(escape_latex("a_b") == "a\\_b");
  CHECK(escape_latex("plain") == "plain");
  std::string all = "\\{}$&#^_%~";
  CHECK(escape_latex(all) == oracle::latex_escape(all));
  CHECK(escape_latex("caf\xc3\xa9") == "caf\xc3\xa9");
}

TEST_CASE("one item, one custody row") {
  th::Env env;
  auto c = env.new_case();
  auto item = env.ingest(c.id, {'h', 'i'}, "a_b%c#d");
  ReportSpec spec{c.id};
  auto tex = text_of(env.e().reports().generate(spec, env.admin));
  CHECK(oracle::longtable_rows(tex, "Evidence Listing").size() == 1);
  auto custody = oracle::longtable_rows(tex, "Chain of Custody");
  REQUIRE(custody.size() == 1);
  auto cells = oracle::row_cells(custody[0]);
  REQUIRE(cells.size() == 6);
  CHECK(cells[3] == "ACQUIRE");
  CHECK(tex.find("a\\_b\\%c\\#d") != std::string::npos);
  CHECK(tex.find("a_b%c#d") == std::string::npos);
  (void)item;
}

TEST_CASE("report generation is recorded") {
  th::Env env;
  auto c = env.new_case();
  env.ingest(c.id, {'x'});
  auto artifact = env.e().reports().generate({c.id}, env.admin);
  CHECK(artifact.media_type == "application/x-latex");
  auto last = env.e().ledger().all().back();
  CHECK(last.kind == EventKind::Report);
  CHECK(last.seq == artifact.event_seq);
  auto listed = env.e().reports().list(c.id, env.admin);
  REQUIRE(listed.size() == 1);
  CHECK(env.e().reports().download(artifact.event_seq, env.admin).bytes == artifact.bytes);
}

TEST_CASE("selecting unreadable evidence is refused before any event") {
  th::Env env;
  auto inv = env.add_user("ivan", Role::Investigator);
  auto c = env.e().cases().create_case("c", "", inv);
  auto item = env.ingest(c.id, {'s'});
  env.e().access().grant(env.admin, {inv, {Category::Evidence, item.id.str()}, Right::Read, Effect::Deny});
  auto events = env.e().ledger().size();
  ReportSpec spec{c.id, {item.id}};
  auto code = code_of([&] { (void)env.e().reports().generate(spec, inv); });
  CHECK(code == ErrorCode::AccessDenied);
  // the denial itself is audited, but no REPORT event appears
  for (const auto& e : env.e().ledger().range(events + 1, 100)) CHECK(e.kind != EventKind::Report);
}

TEST_CASE("deterministic output") {
  th::Env env(true);
  auto c = env.new_case();
  env.ingest(c.id, {'d', 'e', 't'});
  auto a = env.e().reports().render_latex({c.id}, env.admin);
  env.clock->advance(5000);
  auto b = env.e().reports().render_latex({c.id}, env.admin);
  CHECK(a == b);
}

TEST_CASE("excerpts") {
  th::Env env;
  auto c = env.new_case();
  std::vector<std::uint8_t> bytes(64);
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i);
  auto item = env.ingest(c.id, bytes);
  ReportSpec spec{c.id, {item.id}};
  spec.excerpts[item.id] = {{16, 8}};
  auto tex = env.e().reports().render_latex(spec, env.admin);
  CHECK(tex.find("Excerpt at offset 16, 8 bytes") != std::string::npos);
  CHECK(tex.find("00000010") != std::string::npos);
  spec.excerpts[item.id] = {{60, 8}};
  CHECK(code_of([&] { (void)env.e().reports().render_latex(spec, env.admin); }) == ErrorCode::RangeOutOfBounds);
}

TEST_CASE("pdf without an engine") {
  th::Env env;
  if (env.e().reports().find_engine()) return;
  auto c = env.new_case();
  ReportSpec spec{c.id};
  spec.output = ReportFormat::Pdf;
  CHECK(code_of([&] { (void)env.e().reports().generate(spec, env.admin); }) == ErrorCode::LatexEngineMissing);
}
