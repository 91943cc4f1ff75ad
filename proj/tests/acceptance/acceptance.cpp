// Acceptance suite: one PASS/FAIL line per criterion.
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "custodian/fault.hpp"
#include "custodian/hex.hpp"
#include "custodian/process.hpp"
#include "custodian/viewer.hpp"
#include "harness.hpp"
#include "oracles.hpp"
#include "sha1_oracle.hpp"

using namespace custodian;
using nlohmann::json;
using Steady = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects failed sub-checks; the first few are reported.
struct Checks {
  std::vector<std::string> failures;
  std::size_t count = 0;

  void expect(bool ok, const std::string& what) {
    ++count;
    if (!ok) failures.push_back(what);
  }
  Outcome result(const std::string& summary) const {
    if (failures.empty()) return {true, summary};
    std::string d = std::to_string(failures.size()) + " of " + std::to_string(count) + " checks failed: ";
    for (std::size_t i = 0; i < failures.size() && i < 3; ++i) d += (i ? "; " : "") + failures[i];
    return {false, d};
  }
};

std::string hex_of(const std::vector<std::uint8_t>& b) { return oracle::sha1_hex(b); }

double seconds_since(Steady::time_point t) { return std::chrono::duration<double>(Steady::now() - t).count(); }

std::string fmt(double v, int prec = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

void flip_byte(const std::filesystem::path& p, std::uint64_t offset) {
  std::filesystem::permissions(p, std::filesystem::perms::owner_write, std::filesystem::perm_options::add);
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char c = 0;
  f.get(c);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(static_cast<char>(c ^ 0x20));
}

std::int64_t scalar(Engine& e, const std::string& sql) {
  return e.repo().store().read([&](store::Database& db) {
    auto st = db.prepare(sql);
    st.step();
    return st.integer(0);
  });
}

// Runs a command with the shell-free process runner and returns its stdout.
std::vector<std::uint8_t> capture(const std::vector<std::string>& argv, const std::filesystem::path& cwd) {
  return run_process(argv, cwd, std::chrono::seconds(30)).out;
}

// ---------------------------------------------------------------------------

Outcome integrity_roundtrip() {
  th::Env env;
  auto c = env.new_case("integrity");
  std::mt19937_64 rng(1);
  th::TempDir files;
  std::vector<std::pair<std::filesystem::path, std::string>> inputs;
  for (int i = 0; i < 200; ++i) {
    std::size_t n = i == 0 ? 0 : i == 1 ? (1u << 20) : rng() % ((1u << 20) + 1);
    auto bytes = th::random_buffer(rng, n);
    auto p = files.path() / ("f" + std::to_string(i) + ".bin");
    th::write_bytes(p, bytes);
    inputs.emplace_back(p, hex_of(bytes));
  }
  Checks ck;
  auto start = Steady::now();
  std::vector<EvidenceItem> items;
  for (const auto& [path, digest] : inputs) {
    std::ifstream in(path, std::ios::binary);
    items.push_back(env.e().vault().ingest(c.id, in, path.filename().string(), "acceptance", env.admin));
  }
  std::size_t intact = 0;
  for (const auto& item : items) {
    intact += env.e().vault().verify(item.id, env.admin).outcome == VerifyOutcome::Intact;
  }
  double elapsed = seconds_since(start);
  for (std::size_t i = 0; i < items.size(); ++i) {
    ck.expect(items[i].sha1.hex == inputs[i].second, "sha1 differs from oracle for " + inputs[i].first.string());
  }
  ck.expect(intact == items.size(), std::to_string(intact) + "/" + std::to_string(items.size()) + " intact");
  ck.expect(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  return ck.result("200 files, " + std::to_string(intact) + " INTACT, digests match oracle, " + fmt(elapsed) + " s");
}

Outcome tamper_detection() {
  th::Env env;
  auto c = env.new_case("tamper");
  std::mt19937_64 rng(2);
  std::vector<EvidenceItem> items;
  std::set<std::string> digests;
  for (int i = 0; i < 40; ++i) {
    auto bytes = th::random_buffer(rng, 64 + rng() % 8192);
    items.push_back(env.ingest(c.id, bytes, "t" + std::to_string(i)));
    digests.insert(items.back().sha1.hex);
  }
  // A mixed history so the most recent operation differs per item. Clones
  // are avoided: a clone shares its parent's blob.
  for (int k = 0; k < 60; ++k) {
    auto& it = items[rng() % items.size()];
    switch (rng() % 4) {
      case 0: (void)env.e().vault().verify(it.id, env.admin); break;
      case 1: {
        auto child = env.e().vault().extract_region(it.id, 1, it.size_bytes - 2, "x" + std::to_string(k), env.admin);
        if (digests.insert(child.sha1.hex).second) items.push_back(child);
        break;
      }
      case 2: env.e().cases().attach_note(c.id, {it.id, std::nullopt}, "n" + std::to_string(k), env.admin); break;
      default: (void)env.e().plugins().invoke_analysis("org.custodian.wordcount", json::object(), {it.id}, c.id, env.admin);
    }
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<std::size_t> tampered(order.begin(), order.begin() + 15);
  for (auto i : tampered) {
    auto& it = items[i];
    flip_byte(env.e().vault().blobs().path_for(it.sha1), rng() % it.size_bytes);
  }

  Checks ck;
  std::size_t detected = 0, false_pos = 0;
  std::shuffle(order.begin(), order.end(), rng);
  for (auto i : order) {
    const auto& it = items[i];
    // latest prior operation on this item, read straight from the ledger
    std::uint64_t expected = 0;
    for (const auto& ev : env.e().ledger().all()) {
      if (ev.kind == EventKind::Auth) continue;
      if (ev.evidence_id == it.id || ev.related_evidence_id == it.id) expected = std::max(expected, ev.seq);
    }
    auto r = env.e().vault().verify(it.id, env.admin);
    if (tampered.count(i)) {
      bool ok = r.outcome == VerifyOutcome::Corrupt && r.event.kind == EventKind::CorruptionDetected &&
                r.event.caused_by_seq == expected;
      detected += ok;
      ck.expect(ok, "item " + std::to_string(i) + " caused_by " +
                        (r.event.caused_by_seq ? std::to_string(*r.event.caused_by_seq) : "none") + " expected " +
                        std::to_string(expected));
    } else {
      false_pos += r.outcome != VerifyOutcome::Intact;
      ck.expect(r.outcome == VerifyOutcome::Intact, "false positive on item " + std::to_string(i));
    }
  }
  return ck.result(std::to_string(detected) + "/" + std::to_string(tampered.size()) +
                   " flips detected with correct cause, " + std::to_string(false_pos) + " false positives over " +
                   std::to_string(items.size() - tampered.size()) + " untouched");
}

Outcome import_gate() {
  th::Env env;
  auto c = env.new_case("import");
  std::mt19937_64 rng(3);
  Checks ck;
  std::size_t imported = 0;
  for (int i = 0; i < 100; ++i) {
    auto bytes = th::random_buffer(rng, rng() % 65536);
    auto name = "in" + std::to_string(i) + ".bin";
    std::string s(bytes.begin(), bytes.end());
    std::istringstream in(s);
    std::string sidecar = i % 3 == 0 ? hex_of(bytes) : hex_of(bytes) + (i % 3 == 1 ? "  " : " *") + name + "\n";
    try {
      auto item = env.e().vault().import_external(c.id, in, sidecar, name, env.admin);
      imported += item.sha1.hex == hex_of(bytes);
    } catch (const Error& e) {
      ck.expect(false, name + ": " + e.what());
    }
  }
  ck.expect(imported == 100, std::to_string(imported) + "/100 imported");

  const std::string digits = "0123456789abcdef";
  std::size_t refused = 0;
  for (int i = 0; i < 100; ++i) {
    auto bytes = th::random_buffer(rng, 1 + rng() % 65536);
    auto good = hex_of(bytes);
    auto pos = rng() % 40;
    char replacement;
    do replacement = digits[rng() % 16];
    while (replacement == good[pos]);
    auto bad = good;
    bad[pos] = replacement;
    auto rows = scalar(env.e(), "SELECT COUNT(*) FROM evidence");
    auto events = env.e().ledger().size();
    std::string s(bytes.begin(), bytes.end());
    std::istringstream in(s);
    ErrorCode code = ErrorCode::Ok;
    try {
      (void)env.e().vault().import_external(c.id, in, bad + "  x.bin", "x.bin", env.admin);
    } catch (const Error& e) {
      code = e.code();
    }
    bool ok = code == ErrorCode::DigestMismatch && scalar(env.e(), "SELECT COUNT(*) FROM evidence") == rows &&
              env.e().ledger().size() == events &&
              !std::filesystem::exists(env.e().vault().blobs().path_for(DigestValue::sha1(good)));
    refused += ok;
    ck.expect(ok, "corrupted sidecar at digit " + std::to_string(pos) + " gave " +
                      std::string(error_code_name(code)));
  }
  return ck.result("100/100 imported; " + std::to_string(refused) +
                   "/100 single-digit corruptions refused with nothing persisted");
}

Outcome acl_decision_table() {
  th::Env env;
  auto& ac = env.e().access();
  auto c = env.new_case("acl");
  auto item = env.ingest(c.id, {1, 2, 3});
  const Role roles[] = {Role::Administrator, Role::Investigator, Role::Auditor};
  const Category cats[] = {Category::Case, Category::Evidence, Category::ReportInfo};
  PrincipalId subjects[3];
  subjects[0] = env.add_user("subject-admin", Role::Administrator);
  subjects[1] = env.add_user("subject-inv", Role::Investigator);
  subjects[2] = env.add_user("subject-aud", Role::Auditor);
  auto object_for = [&](Category cat) {
    return ObjectRef{cat, cat == Category::Evidence ? item.id.str() : c.id.str()};
  };
  auto maybe = [](int r) { return r == 0 ? MaybeRight{} : MaybeRight{static_cast<Right>(r)}; };

  Checks ck;
  std::size_t cells = 0;
  for (int ri = 0; ri < 3; ++ri) {
    for (auto cat : cats) {
      auto obj = object_for(cat);
      for (int want = 1; want <= 3; ++want) {
        for (int explicit_kind = 0; explicit_kind < 3; ++explicit_kind) {  // absent, ALLOW, DENY
          for (int role_ge = 0; role_ge < 2; ++role_ge) {
            for (int cat_ge = 0; cat_ge < 2; ++cat_ge) {
              // boundary values: exactly the requested right, or one below it
              int role_def = role_ge ? want : want - 1;
              int cat_def = cat_ge ? want : want - 1;
              ac.set_role_default(env.admin, roles[ri], cat, maybe(role_def));
              ac.set_category_default(env.admin, cat, maybe(cat_def));
              for (int r = 1; r <= 3; ++r) ac.revoke(env.admin, subjects[ri], obj, static_cast<Right>(r));
              oracle::AclCfg cfg{{}, role_def, cat_def};
              if (explicit_kind) {
                ac.grant(env.admin, {subjects[ri], obj, static_cast<Right>(want),
                                     explicit_kind == 2 ? Effect::Deny : Effect::Allow});
                cfg.entries.push_back({want, explicit_kind == 2});
              }
              bool got = ac.authorize(subjects[ri], static_cast<Right>(want), obj) == Decision::Allow;
              ++cells;
              ck.expect(got == oracle::acl_allows(cfg, want),
                        std::string(to_string(roles[ri])) + "/" + std::string(to_string(cat)) + " want " +
                            std::to_string(want) + " explicit " + std::to_string(explicit_kind) + " role>= " +
                            std::to_string(role_ge) + " cat>= " + std::to_string(cat_ge));
            }
          }
        }
      }
      for (int r = 1; r <= 3; ++r) ac.revoke(env.admin, subjects[ri], obj, static_cast<Right>(r));
    }
  }

  // Hierarchy over random configurations: the pure decision for all of them,
  // the persisted path for a sample.
  std::mt19937_64 rng(4);
  std::size_t configs = 0, persisted = 0;
  for (int k = 0; k < 10000; ++k) {
    auto role = roles[rng() % 3];
    auto cat = cats[rng() % 3];
    DefaultRightsPolicy policy;
    oracle::AclCfg cfg;
    cfg.role_default = static_cast<int>(rng() % 4);
    cfg.category_default = static_cast<int>(rng() % 4);
    policy.role_defaults[static_cast<int>(role)][static_cast<int>(cat)] = maybe(cfg.role_default);
    policy.category_defaults[static_cast<int>(cat)] = maybe(cfg.category_default);
    std::vector<AccessControlEntry> entries;
    std::set<int> used;
    auto n = rng() % 4;
    for (std::size_t e = 0; e < n; ++e) {
      int r = 1 + static_cast<int>(rng() % 3);
      if (!used.insert(r).second) continue;  // one entry per right, as stored
      bool deny = rng() % 2;
      entries.push_back({PrincipalId{}, {cat, "o"}, static_cast<Right>(r), deny ? Effect::Deny : Effect::Allow});
      cfg.entries.push_back({r, deny});
    }
    bool allow[4] = {true, false, false, false};
    for (int r = 1; r <= 3; ++r) {
      allow[r] = decide(role, cat, static_cast<Right>(r), entries, policy) == Decision::Allow;
      ck.expect(allow[r] == oracle::acl_allows(cfg, r), "random config " + std::to_string(k) + " disagrees");
    }
    ck.expect((!allow[3] || allow[2]) && (!allow[2] || allow[1]), "hierarchy broken in config " + std::to_string(k));
    ++configs;

    if (k % 50 == 0) {
      auto ri = static_cast<int>(role);
      auto obj = object_for(cat);
      ac.set_role_default(env.admin, role, cat, maybe(cfg.role_default));
      ac.set_category_default(env.admin, cat, maybe(cfg.category_default));
      for (int r = 1; r <= 3; ++r) ac.revoke(env.admin, subjects[ri], obj, static_cast<Right>(r));
      for (const auto& e : entries) ac.grant(env.admin, {subjects[ri], obj, e.right, e.effect});
      bool p[4] = {true, false, false, false};
      for (int r = 1; r <= 3; ++r) {
        p[r] = ac.authorize(subjects[ri], static_cast<Right>(r), obj) == Decision::Allow;
        ck.expect(p[r] == allow[r], "persisted decision differs in config " + std::to_string(k));
      }
      ck.expect((!p[3] || p[2]) && (!p[2] || p[1]), "persisted hierarchy broken in config " + std::to_string(k));
      ++persisted;
      for (int r = 1; r <= 3; ++r) ac.revoke(env.admin, subjects[ri], obj, static_cast<Right>(r));
    }
  }
  return ck.result(std::to_string(cells) + " table cells agree with oracle; hierarchy holds over " +
                   std::to_string(configs) + " random configs (" + std::to_string(persisted) + " via storage)");
}

Outcome custody_completeness() {
  th::Env env;
  std::mt19937_64 rng(5);
  auto inv = env.add_user("investigator", Role::Investigator, "inv-secret-1");
  auto aud = env.add_user("auditor", Role::Auditor, "aud-secret-1");
  auto baseline = env.e().ledger().size();

  std::multiset<EventKind> predicted;
  std::vector<CaseId> cases;
  std::vector<EvidenceItem> items;
  auto some_item = [&]() -> const EvidenceItem& { return items[rng() % items.size()]; };
  cases.push_back(env.e().cases().create_case("custody", "", inv).id);
  predicted.insert(EventKind::CaseCreate);
  items.push_back(env.e().vault().ingest(cases[0], std::vector<std::uint8_t>{'s', 'e', 'e', 'd', '!'}, "seed", "", inv));
  predicted.insert(EventKind::Acquire);

  std::map<std::string, int> tally;
  for (int op = 2; op < 50; ++op) {
    auto pick = rng() % 14;
    auto cid = cases[rng() % cases.size()];
    switch (pick) {
      case 0:
        cases.push_back(env.e().cases().create_case("c" + std::to_string(op), "", inv).id);
        predicted.insert(EventKind::CaseCreate);
        tally["create"]++;
        break;
      case 1: {
        auto bytes = th::random_buffer(rng, 16 + rng() % 512);
        items.push_back(env.e().vault().ingest(cid, bytes, "i" + std::to_string(op), "", inv));
        predicted.insert(EventKind::Acquire);
        tally["ingest"]++;
        break;
      }
      case 2: {
        auto bytes = th::random_buffer(rng, 16 + rng() % 512);
        std::string s(bytes.begin(), bytes.end());
        std::istringstream in(s);
        items.push_back(env.e().vault().import_external(cid, in, hex_of(bytes), "m" + std::to_string(op), inv));
        predicted.insert(EventKind::Import);
        tally["import"]++;
        break;
      }
      case 3:
        (void)env.e().vault().verify(some_item().id, inv);
        predicted.insert(EventKind::Verify);
        tally["verify"]++;
        break;
      case 4:
        items.push_back(env.e().vault().clone_evidence(some_item().id, std::nullopt, inv));
        predicted.insert({EventKind::Clone, EventKind::Verify});
        tally["clone"]++;
        break;
      case 5: {
        const auto& src = some_item();
        items.push_back(env.e().vault().extract_region(src.id, 0, 1 + rng() % src.size_bytes, "x", inv));
        predicted.insert({EventKind::Extract, EventKind::Verify});
        tally["extract"]++;
        break;
      }
      case 6: {
        const auto& it = some_item();
        env.e().cases().attach_note(it.case_id, {it.id, std::nullopt}, "note " + std::to_string(op), inv);
        predicted.insert(EventKind::Note);
        tally["note"]++;
        break;
      }
      case 7:
        env.e().cases().set_report_section(cid, ReportSection::Conclusion, "s" + std::to_string(op), inv);
        predicted.insert(EventKind::Note);
        tally["section"]++;
        break;
      case 8: {
        const auto& it = some_item();
        (void)env.e().plugins().invoke_analysis("org.custodian.wordcount", json::object(), {it.id}, it.case_id, inv);
        predicted.insert({EventKind::ToolRun, EventKind::Verify});
        tally["analysis"]++;
        break;
      }
      case 9:
        (void)env.e().plugins().invoke_gathering("org.custodian.sysinfo", json::object(), cid, inv);
        predicted.insert(EventKind::ToolRun);
        tally["gathering"]++;
        break;
      case 10:
        (void)env.e().reports().generate({cid}, inv);
        predicted.insert(EventKind::Report);
        tally["report"]++;
        break;
      case 11:
        env.e().access().grant(env.admin, {aud, {Category::Case, cid.str()}, Right::Read, Effect::Allow});
        predicted.insert(EventKind::AclChange);
        tally["grant"]++;
        break;
      case 12:
        (void)env.e().access().authenticate("auditor", "aud-secret-1");
        predicted.insert(EventKind::Auth);
        tally["login"]++;
        break;
      default:
        (void)env.e().vault().read_bytes(some_item().id, 0, 1, inv);  // plain reads are not logged
        tally["read"]++;
        break;
    }
  }

  Checks ck;
  auto all = env.e().ledger().all();
  std::multiset<EventKind> actual;
  for (const auto& ev : all) {
    if (ev.seq > baseline) actual.insert(ev.kind);
  }
  ck.expect(actual == predicted, "event multiset differs: " + std::to_string(actual.size()) + " recorded vs " +
                                     std::to_string(predicted.size()) + " predicted");
  ck.expect(env.e().ledger().verify_chain().ok, "chain not OK after session");

  // Edit every persisted event out-of-band, one at a time.
  std::size_t caught = 0;
  for (const auto& ev : all) {
    auto seq = static_cast<std::int64_t>(ev.seq);
    std::string edit, undo;
    switch (ev.seq % 3) {
      case 0:
        edit = "UPDATE custody_events SET description = description || '.' WHERE seq = ?";
        undo = "UPDATE custody_events SET description = substr(description, 1, length(description) - 1) WHERE seq = ?";
        break;
      case 1:
        edit = "UPDATE custody_events SET timestamp_ms = timestamp_ms + 1 WHERE seq = ?";
        undo = "UPDATE custody_events SET timestamp_ms = timestamp_ms - 1 WHERE seq = ?";
        break;
      default:
        edit = "UPDATE custody_events SET kind = CASE kind WHEN 'NOTE' THEN 'VERIFY' ELSE 'NOTE' END WHERE seq = ?";
        break;
    }
    std::string original_kind(to_string(ev.kind));
    env.e().repo().store().write([&](store::Database& db) {
      th::drop_append_guard(db);
      db.prepare(edit).bind(1, seq).run(); });
    auto st = env.e().ledger().verify_chain();
    bool ok = !st.ok && st.broken_at == ev.seq;
    caught += ok;
    ck.expect(ok, "edit of seq " + std::to_string(ev.seq) + " reported as " +
                      (st.ok ? std::string("OK") : "BROKEN_AT " + std::to_string(st.broken_at)));
    env.e().repo().store().write([&](store::Database& db) {
      if (undo.empty()) {
        db.prepare("UPDATE custody_events SET kind = ? WHERE seq = ?").bind(1, original_kind).bind(2, seq).run();
      } else {
        db.prepare(undo).bind(1, seq).run();
      }
    });
  }
  ck.expect(env.e().ledger().verify_chain().ok, "chain not OK after restoring edits");
  return ck.result("50 operations gave the predicted " + std::to_string(predicted.size()) +
                   " events; chain OK; " + std::to_string(caught) + "/" + std::to_string(all.size()) +
                   " single-event edits located");
}

Outcome extraction_oracle() {
  th::Env env;
  auto c = env.new_case("extract");
  std::mt19937_64 rng(6);
  std::vector<std::vector<std::uint8_t>> sources;
  std::vector<EvidenceItem> items;
  for (int i = 0; i < 20; ++i) {
    sources.push_back(th::random_buffer(rng, 1 + rng() % 200000));
    items.push_back(env.ingest(c.id, sources.back(), "src" + std::to_string(i)));
  }
  Checks ck;
  std::size_t good = 0;
  for (int k = 0; k < 1000; ++k) {
    auto f = rng() % sources.size();
    const auto& src = sources[f];
    std::uint64_t offset = rng() % src.size();
    std::uint64_t room = src.size() - offset;
    std::uint64_t length = k % 4 == 0 ? room : 1 + rng() % std::min<std::uint64_t>(room, k % 2 ? 64 : room);
    std::vector<std::uint8_t> slice(src.begin() + static_cast<long>(offset),
                                    src.begin() + static_cast<long>(offset + length));
    auto child = env.e().vault().extract_region(items[f].id, offset, length, "c" + std::to_string(k), env.admin);
    auto got = env.e().vault().read_bytes(child.id, 0, length, env.admin);
    bool ok = got == slice && child.sha1.hex == hex_of(slice) && child.size_bytes == length;
    good += ok;
    ck.expect(ok, "triple (" + std::to_string(f) + ", " + std::to_string(offset) + ", " + std::to_string(length) + ")");
  }
  return ck.result(std::to_string(good) + "/1000 extractions match the byte slice and its oracle digest");
}

Outcome plugin_capture() {
  th::Env env;
  auto c = env.new_case("plugins");
  Checks ck;
  auto plugins = th::source_dir() / "plugins";
  auto fixtures = th::fixtures_dir() / "plugins";

  auto content = [&](const EvidenceId& id) {
    auto item = env.e().vault().get(id, env.admin);
    return env.e().vault().read_bytes(id, 0, std::max<std::uint64_t>(item.size_bytes, 1), env.admin);
  };

  auto inv = env.e().plugins().invoke_gathering("org.custodian.sysinfo", json::object(), c.id, env.admin);
  auto expected = capture({"/bin/sh", "./sysinfo.sh", "workstation"}, plugins / "sysinfo");
  ck.expect(inv.outcome == ToolOutcome::Ok, "sysinfo outcome");
  ck.expect(inv.stdout_evidence && content(*inv.stdout_evidence) == expected, "sysinfo evidence differs from stdout");
  ck.expect(inv.stdout_evidence && env.e().vault().get(*inv.stdout_evidence, env.admin).sha1.hex == hex_of(expected),
            "sysinfo digest");

  auto target = env.ingest(c.id, {'a', 'b', 'c'}, "abc.bin");
  th::TempDir scratch;
  th::write_bytes(scratch.path() / "abc.bin", {'a', 'b', 'c'});
  auto failing_out = capture({"/bin/sh", "./failing.sh", (scratch.path() / "abc.bin").string()}, fixtures / "failing");
  auto failed = env.e().plugins().invoke_analysis("test.fixture.failing", json::object(), {target.id}, c.id, env.admin);
  ck.expect(failed.size() == 1 && failed[0].outcome == ToolOutcome::ToolFailed, "failing tool outcome");
  ck.expect(failed.size() == 1 && failed[0].exit_status == 2, "failing tool exit status");
  ck.expect(failed.size() == 1 && failed[0].stdout_evidence && content(*failed[0].stdout_evidence) == failing_out,
            "failing tool stdout not captured");
  ck.expect(failed.size() == 1 &&
                std::string(failed[0].stderr_capture.begin(), failed[0].stderr_capture.end()).find("cannot continue") !=
                    std::string::npos,
            "failing tool stderr not captured");
  auto recorded = env.e().plugins().invocations(c.id, env.admin);
  ck.expect(std::any_of(recorded.begin(), recorded.end(),
                        [](const auto& r) { return r.outcome == ToolOutcome::ToolFailed; }),
            "failed invocation not recorded");

  auto second = env.ingest(c.id, {'d', 'e', 'f', ' ', 'g'}, "def.bin");
  std::vector<BatchStep> plan{
      {"org.custodian.wordcount", json::object(), {target.id}},
      {"test.fixture.failing", json::object(), {target.id}},
      {"org.custodian.sysinfo", {{"label", "batch"}}, {}},
      {"org.custodian.wordcount", json::object(), {target.id, second.id}},
      {"test.fixture.sleeper", json::object(), {}},
  };
  const std::vector<std::string> want_outcome{"OK", "TOOL_FAILED", "OK", "OK", "TIMEOUT"};
  const std::vector<std::size_t> want_runs{1, 1, 1, 2, 1};
  auto before = env.e().plugins().invocations(c.id, env.admin).size();
  auto report = env.e().plugins().run_batch(plan, c.id, env.admin);
  std::vector<std::string> got;
  bool counts_ok = report.steps.size() == plan.size();
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    got.push_back(report.steps[i].outcome());
    if (i < want_runs.size()) counts_ok = counts_ok && report.steps[i].invocations.size() == want_runs[i];
  }
  std::string joined;
  for (const auto& g : got) joined += (joined.empty() ? "" : ",") + g;
  ck.expect(got == want_outcome, "batch outcomes " + joined);
  ck.expect(counts_ok, "batch invocation counts");
  ck.expect(env.e().plugins().invocations(c.id, env.admin).size() == before + 6, "batch invocations not all recorded");

  // A mistyped parameter anywhere rejects the plan before any step runs.
  auto invocations_before = env.e().plugins().invocations(c.id, env.admin).size();
  ErrorCode code = ErrorCode::Ok;
  try {
    auto bad = plan;
    bad.push_back({"org.custodian.sysinfo", {{"label", 5}}, {}});
    (void)env.e().plugins().run_batch(bad, c.id, env.admin);
  } catch (const Error& e) {
    code = e.code();
  }
  ck.expect(code == ErrorCode::PlanInvalid, "mistyped parameter gave " + std::string(error_code_name(code)));
  ck.expect(env.e().plugins().invocations(c.id, env.admin).size() == invocations_before,
            "steps ran before a mistyped parameter was rejected");
  return ck.result("sysinfo evidence equals independent stdout; exit-2 tool recorded TOOL_FAILED with output; "
                   "batch outcomes [" + joined + "] as planned; bad plan rejected before execution");
}

Outcome report_correctness() {
  th::Env env(true);
  auto c = env.new_case("report fixture");
  const std::string adversarial = "a\\b{c}d$e&f#g^h_i%j~k.bin";
  auto a = env.ingest(c.id, std::vector<std::uint8_t>{'h', 'e', 'l', 'l', 'o', '\n'}, adversarial);
  auto b = env.ingest(c.id, th::random_buffer(*std::make_unique<std::mt19937_64>(8), 700), "image.dd");
  auto unselected = env.ingest(c.id, {'z'}, "unselected.bin");
  (void)env.e().vault().verify(a.id, env.admin);
  auto copy = env.e().vault().clone_evidence(a.id, std::string("copy of " + adversarial), env.admin);
  (void)env.e().vault().extract_region(b.id, 16, 32, "slice", env.admin);
  env.e().cases().attach_note(c.id, {a.id, std::nullopt}, "note with 100% of $pecial & odd_chars", env.admin);
  env.e().cases().set_report_section(c.id, ReportSection::ExecutiveSummary, "Summary: {braces} ~tilde~", env.admin);
  (void)env.e().plugins().invoke_analysis("org.custodian.wordcount", json::object(), {b.id}, c.id, env.admin);
  (void)env.e().vault().verify(unselected.id, env.admin);

  std::vector<EvidenceId> selected{a.id, b.id, copy.id};
  std::set<EvidenceId> sel(selected.begin(), selected.end());
  std::vector<std::string> expected_seqs;
  std::set<std::uint64_t> seen;
  for (const auto& ev : env.e().ledger().all()) {
    bool touches = (ev.evidence_id && sel.count(*ev.evidence_id)) ||
                   (ev.related_evidence_id && sel.count(*ev.related_evidence_id));
    if (touches && seen.insert(ev.seq).second) expected_seqs.push_back(std::to_string(ev.seq));
  }

  ReportSpec spec{c.id, selected};
  auto first = env.e().reports().generate(spec, env.admin);
  env.clock->advance(120'000);
  auto second = env.e().reports().generate(spec, env.admin);
  std::string tex(first.bytes.begin(), first.bytes.end());

  Checks ck;
  auto listing = oracle::longtable_rows(tex, "Evidence Listing");
  auto custody = oracle::longtable_rows(tex, "Chain of Custody");
  ck.expect(listing.size() == selected.size(),
            "listing rows " + std::to_string(listing.size()) + " vs " + std::to_string(selected.size()));
  ck.expect(custody.size() == expected_seqs.size(),
            "custody rows " + std::to_string(custody.size()) + " vs " + std::to_string(expected_seqs.size()));
  std::vector<std::string> seqs;
  for (const auto& row : custody) seqs.push_back(oracle::row_cells(row).front());
  ck.expect(seqs == expected_seqs, "custody rows do not list the item events in order");
  bool named = !listing.empty() && oracle::row_cells(listing[0]).front() == oracle::latex_escape(adversarial);
  ck.expect(named, "adversarial name not escaped as expected");
  ck.expect(tex.find(adversarial) == std::string::npos, "raw adversarial name leaked into the source");
  ck.expect(first.bytes == second.bytes, "two generations differ");

  std::string compile = "skipped, no LaTeX engine on this host";
  if (env.e().reports().find_engine()) {
    try {
      auto pdf = env.e().reports().compile_pdf(tex);
      ck.expect(pdf.size() > 4 && pdf[0] == '%' && pdf[1] == 'P', "engine produced no PDF");
      compile = "compiled cleanly";
    } catch (const Error& e) {
      ck.expect(false, std::string("compile failed: ") + e.what());
    }
  }
  return ck.result(std::to_string(listing.size()) + " listing rows, " + std::to_string(custody.size()) +
                   " custody rows as predicted; specials escaped; byte-identical reruns; compile " + compile);
}

Outcome hexdump_goldens() {
  Checks ck;
  for (int n : {0, 1, 15, 16, 17, 4096}) {
    auto dir = th::fixtures_dir() / "hex";
    auto input = th::read_bytes(dir / (std::to_string(n) + ".bin"));
    auto golden = th::read_text(dir / (std::to_string(n) + ".hex"));
    ck.expect(input.size() == static_cast<std::size_t>(n) && viewer::render_hex(input, 0) == golden,
              "golden " + std::to_string(n));
  }
  std::mt19937_64 rng(9);
  std::size_t round = 0;
  for (int i = 0; i < 500; ++i) {
    auto buf = th::random_buffer(rng, rng() % 3000);
    std::uint64_t base = (rng() % 1000) * 16;
    auto parsed = oracle::parse_hex_columns(viewer::render_hex(buf, base));
    bool ok = parsed && *parsed == buf;
    round += ok;
    ck.expect(ok, "round trip " + std::to_string(i));
  }
  return ck.result("6/6 goldens match; " + std::to_string(round) + "/500 random buffers reconstructed");
}

Outcome soak(int seconds) {
  th::Env env;
  std::mt19937_64 rng(10);
  std::map<std::string, std::size_t> ops;
  std::size_t errors = 0;
  std::string first_error;
  std::uint64_t baseline = 0, peak = 0;
  auto start = Steady::now();
  double warmup = std::min(60.0, std::max(1.0, seconds * 0.05));
  std::size_t rotations = 0;

  CaseId current;
  std::vector<EvidenceItem> items;
  auto rotate = [&] {
    current = env.new_case("soak " + std::to_string(rotations++)).id;
    items.clear();
    items.push_back(env.ingest(current, th::random_buffer(rng, 4096), "anchor"));
  };
  rotate();
  std::size_t iteration = 0;
  while (seconds_since(start) < seconds) {
    ++iteration;
    try {
      const auto& it = items[rng() % items.size()];
      switch (rng() % 6) {
        case 0:
          items.push_back(env.ingest(current, th::random_buffer(rng, 1 + rng() % 65536), "i" + std::to_string(iteration)));
          ops["ingest"]++;
          break;
        case 1:
          if (env.e().vault().verify(it.id, env.admin).outcome != VerifyOutcome::Intact) throw std::runtime_error("not intact");
          ops["verify"]++;
          break;
        case 2:
          items.push_back(env.e().vault().clone_evidence(it.id, std::nullopt, env.admin));
          ops["clone"]++;
          break;
        case 3:
          items.push_back(env.e().vault().extract_region(it.id, 0, 1 + rng() % it.size_bytes, "x", env.admin));
          ops["extract"]++;
          break;
        case 4:
          env.e().cases().attach_note(current, {it.id, std::nullopt}, "soak note " + std::to_string(iteration), env.admin);
          ops["note"]++;
          break;
        default: {
          ReportSpec spec{current};
          (void)env.e().reports().generate(spec, env.admin);
          ops["report"]++;
        }
      }
    } catch (const std::exception& e) {
      if (errors++ == 0) first_error = e.what();
    }
    if (iteration % 60 == 0) rotate();
    if (iteration % 20 == 0) {
      auto rss = th::rss_pages();
      if (baseline == 0 && seconds_since(start) >= warmup) baseline = rss;
      if (baseline) peak = std::max(peak, rss);
    }
  }
  if (baseline == 0) baseline = peak = th::rss_pages();
  auto chain = env.e().ledger().verify_chain();
  Checks ck;
  ck.expect(errors == 0, std::to_string(errors) + " errors, first: " + first_error);
  ck.expect(peak < 2 * baseline, "memory grew from " + std::to_string(baseline) + " to " + std::to_string(peak) + " pages");
  ck.expect(chain.ok, "chain broken at " + std::to_string(chain.broken_at));
  std::string mix;
  for (const auto& [k, v] : ops) mix += (mix.empty() ? "" : " ") + k + "=" + std::to_string(v);
  auto page_kb = static_cast<double>(sysconf(_SC_PAGESIZE)) / 1024.0;
  return ck.result(std::to_string(seconds) + " s, " + std::to_string(iteration) + " operations (" + mix + "), 0 errors, RSS " +
                   fmt(baseline * page_kb / 1024.0) + " -> " + fmt(peak * page_kb / 1024.0) + " MiB peak, chain OK over " +
                   std::to_string(chain.events) + " events");
}

// Consistency of a repository left behind by an interrupted engine.
void check_consistent(const std::filesystem::path& repo, const std::string& label, Checks& ck) {
  auto engine = Engine::open(th::config_for(repo));
  auto chain = engine->ledger().verify_chain();
  ck.expect(chain.ok, label + ": chain broken at " + std::to_string(chain.broken_at));
  auto& store = engine->repo().store();
  std::vector<std::pair<std::string, std::string>> rows;
  store.read([&](store::Database& db) {
    auto st = db.prepare("SELECT id, sha1 FROM evidence");
    while (st.step()) rows.emplace_back(st.text(0), st.text(1));
  });
  for (const auto& [id, sha1] : rows) {
    auto digest = DigestValue::sha1(sha1);
    auto re = engine->vault().blobs().rehash(digest);
    ck.expect(re && re->sha1 == digest, label + ": evidence " + id + " has no intact blob");
    auto events = scalar(*engine, "SELECT COUNT(*) FROM custody_events WHERE evidence_id = '" + id +
                                      "' AND kind IN ('ACQUIRE','IMPORT','CLONE','EXTRACT','TOOL_RUN')");
    ck.expect(events == 1, label + ": evidence " + id + " has " + std::to_string(events) + " creation events");
  }
  auto fk = store.read([](store::Database& db) {
    auto st = db.prepare("PRAGMA foreign_key_check");
    return st.step();
  });
  ck.expect(!fk, label + ": dangling foreign keys");
  auto integrity = store.read([](store::Database& db) {
    auto st = db.prepare("PRAGMA integrity_check");
    st.step();
    return st.text(0);
  });
  ck.expect(integrity == "ok", label + ": integrity_check " + integrity);
}

// Mutation mix run against an armed kill-point.
void workload(Engine& e, const PrincipalId& admin, const CaseId& c, const EvidenceId& seed, int rounds) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < rounds; ++i) {
    auto item = e.vault().ingest(c, th::random_buffer(rng, 1024 + i), "w" + std::to_string(i), "crash", admin);
    (void)e.vault().clone_evidence(seed, std::nullopt, admin);
    (void)e.vault().extract_region(item.id, 0, 100, "part", admin);
    e.cases().attach_note(c, {item.id, std::nullopt}, "crash note", admin);
    (void)e.plugins().invoke_gathering("org.custodian.sysinfo", json::object(), c, admin);
  }
}

Outcome crash_consistency() {
  Checks ck;
  std::size_t crashes = 0, throws = 0;
  for (auto point : all_fault_points()) {
    for (int skip : {0, 3, 11}) {
      th::TempDir dir;
      auto repo = dir.path() / "repo";
      CaseId c;
      EvidenceId seed;
      {
        auto e = Engine::open(th::config_for(repo));
        auto admin = e->access().find_username(th::kAdminUser)->id;
        c = e->cases().create_case("crash", "", admin).id;
        seed = e->vault().ingest(c, std::vector<std::uint8_t>(4096, 0x5a), "seed", "", admin).id;
      }
      std::string label = std::string(fault_point_name(point)) + "+" + std::to_string(skip);
      std::cout.flush();
      pid_t pid = fork();
      if (pid == 0) {
        try {
          auto e = Engine::open(th::config_for(repo));
          auto admin = e->access().find_username(th::kAdminUser)->id;
          arm_fault(point, FaultAction::Exit, skip);
          workload(*e, admin, c, seed, 10);
        } catch (...) {
          _exit(3);
        }
        _exit(0);
      }
      int status = 0;
      waitpid(pid, &status, 0);
      bool killed = WIFEXITED(status) && WEXITSTATUS(status) == kFaultExitStatus;
      crashes += killed;
      ck.expect(killed, label + ": child did not stop at the kill-point (status " + std::to_string(status) + ")");
      check_consistent(repo, label + " exit", ck);

      // Same point as a thrown I/O failure inside a live engine.
      {
        auto e = Engine::open(th::config_for(repo));
        auto admin = e->access().find_username(th::kAdminUser)->id;
        arm_fault(point, FaultAction::Throw, skip);
        bool threw = false;
        try {
          workload(*e, admin, c, seed, 10);
        } catch (const std::exception&) {
          threw = true;
        }
        disarm_faults();
        throws += threw;
        ck.expect(threw, label + ": armed throw never fired");
        // the engine stays usable after the failure
        try {
          auto after = e->vault().ingest(c, std::vector<std::uint8_t>{'o', 'k'}, "after", "", admin);
          ck.expect(e->vault().verify(after.id, admin).outcome == VerifyOutcome::Intact, label + ": engine unusable");
        } catch (const std::exception& ex) {
          ck.expect(false, label + ": engine unusable after throw: " + ex.what());
        }
      }
      check_consistent(repo, label + " throw", ck);
    }
  }
  auto points = all_fault_points().size();
  return ck.result(std::to_string(points) + " kill-points x 3 positions: " + std::to_string(crashes) +
                   " process kills and " + std::to_string(throws) +
                   " thrown failures, each reopened with chain OK and no dangling metadata");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  int soak_seconds = 1200;
  std::vector<std::string> only;
  app.add_option("--soak-seconds", soak_seconds, "Duration of the soak loop")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "Run only the named criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"integrity-roundtrip", integrity_roundtrip},
      {"tamper-detection", tamper_detection},
      {"import-gate", import_gate},
      {"acl-decision-table", acl_decision_table},
      {"custody-completeness", custody_completeness},
      {"extraction-oracle", extraction_oracle},
      {"plugin-capture", plugin_capture},
      {"report-correctness", report_correctness},
      {"hexdump-goldens", hexdump_goldens},
      {"soak", [&] { return soak(soak_seconds); }},
      {"crash-consistency", crash_consistency},
  };

  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    auto t = Steady::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("aborted: ") + e.what()};
    }
    disarm_faults();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt(seconds_since(t)) << " s): " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
