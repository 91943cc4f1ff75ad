#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "custodian/custodian.h"

using nlohmann::json;

namespace {

struct Scratch {
  Scratch() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "custodian-capi-XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~Scratch() { std::filesystem::remove_all(path); }
  std::filesystem::path path;
};

std::string config(const std::filesystem::path& repo) {
  return "repo=" + repo.string() + "\nadmin_user=admin\nadmin_secret=capi-secret\nkdf_iterations=100000\n" +
         "plugin_dirs=" + std::string(CUSTODIAN_SOURCE_DIR) + "/plugins\n";
}

json call(cust_engine* e, const char* token, const char* op, const json& args, const std::string& input = {}) {
  cust_result* r = nullptr;
  auto s = cust_call(e, token, op, args.dump().c_str(), reinterpret_cast<const uint8_t*>(input.data()), input.size(),
                     &r);
  REQUIRE_MESSAGE(s == CUST_OK, cust_status_name(s), ": ", cust_last_error());
  auto j = json::parse(cust_result_json(r));
  cust_result_free(r);
  return j;
}

}  // namespace

TEST_CASE("status names are stable") {
  CHECK(std::string(cust_status_name(CUST_OK)) == "OK");
  CHECK(std::string(cust_status_name(CUST_DIGEST_MISMATCH)) == "DIGEST_MISMATCH");
  CHECK(std::string(cust_status_name(CUST_INTERNAL)) == "INTERNAL");
  CHECK(std::string(cust_status_name(static_cast<cust_status>(999))) == "UNKNOWN_STATUS");
  CHECK(std::string(cust_version()) == "1.0.0");
  CHECK(std::string(cust_operations()).find("evidence.ingest\n") != std::string::npos);
}

TEST_CASE("null arguments are rejected") {
  CHECK(cust_engine_open(nullptr, nullptr, 0, nullptr) == CUST_INVALID_ARGUMENT);
  cust_engine* e = nullptr;
  CHECK(cust_engine_open(nullptr, nullptr, 0, &e) == CUST_INVALID_ARGUMENT);
  CHECK(e == nullptr);
  CHECK(std::string(cust_last_error()).size() > 0);
}

TEST_CASE("session through the C API") {
  Scratch dir;
  cust_engine* e = nullptr;
  REQUIRE(cust_engine_open(nullptr, config(dir.path / "repo").c_str(), 0, &e) == CUST_OK);

  char* token = nullptr;
  CHECK(cust_login(e, "admin", "wrong", &token) == CUST_BAD_CREDENTIALS);
  REQUIRE(cust_login(e, "admin", "capi-secret", &token) == CUST_OK);

  auto c = call(e, token, "cases.create", {{"details", "capi"}});
  auto item = call(e, token, "evidence.ingest", {{"case_id", c["id"]}, {"name", "abc"}}, "abc");
  CHECK(item["sha1"] == "a9993e364706816aba3e25717850c26c9cd0d89d");

  cust_result* r = nullptr;
  REQUIRE(cust_call(e, token, "evidence.read", json{{"evidence_id", item["id"]}}.dump().c_str(), nullptr, 0, &r) ==
          CUST_OK);
  size_t len = 0;
  auto* bytes = cust_result_bytes(r, &len);
  CHECK(std::string(reinterpret_cast<const char*>(bytes), len) == "abc");
  cust_result_free(r);

  r = nullptr;
  CHECK(cust_call(e, token, "cases.get", R"({"case_id":"ffffffffffffffffffffffffffffffff"})", nullptr, 0, &r) ==
        CUST_UNKNOWN_CASE);
  CHECK(r == nullptr);
  CHECK(cust_call(e, token, "cases.list", "{not json", nullptr, 0, &r) == CUST_INVALID_ARGUMENT);

  auto path = dir.path / "ledger.txt";
  auto exported = [&] {
    cust_result* x = nullptr;
    REQUIRE(cust_call(e, token, "ledger.export", nullptr, nullptr, 0, &x) == CUST_OK);
    size_t n = 0;
    auto* b = cust_result_bytes(x, &n);
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(b), static_cast<std::streamsize>(n));
    cust_result_free(x);
  };
  exported();
  uint64_t events = 0, broken = 1;
  CHECK(cust_ledger_verify_export(path.c_str(), &events, &broken) == CUST_OK);
  CHECK(events > 0);
  CHECK(broken == 0);

  CHECK(cust_logout(e, token) == CUST_OK);
  CHECK(cust_call(e, token, "cases.list", nullptr, nullptr, 0, &r) == CUST_AUTH_REQUIRED);
  cust_free(token);
  cust_engine_close(e);

  cust_engine* again = nullptr;
  REQUIRE(cust_engine_open((dir.path / "repo").c_str(), nullptr, 0, &again) == CUST_OK);
  cust_engine* locked = nullptr;
  CHECK(cust_engine_open((dir.path / "repo").c_str(), nullptr, 0, &locked) == CUST_LOCKED);
  cust_engine_close(again);
}

TEST_CASE("serving over the C API") {
  Scratch dir;
  cust_engine* e = nullptr;
  REQUIRE(cust_engine_open(nullptr, config(dir.path / "repo").c_str(), 0, &e) == CUST_OK);
  cust_server* s = nullptr;
  CHECK(cust_serve(e, "10.1.2.3", 0, 0, nullptr, &s, nullptr) == CUST_BIND_FAILURE);
  int port = 0;
  REQUIRE(cust_serve(e, "127.0.0.1", 0, 0, nullptr, &s, &port) == CUST_OK);
  CHECK(port > 0);
  cust_server_stop(s);
  cust_server_wait(s);
  cust_engine_close(e);
}

TEST_CASE("a fresh repository without bootstrap credentials") {
  Scratch dir;
  cust_engine* e = nullptr;
  unsetenv("CUSTODIAN_ADMIN_USER");
  unsetenv("CUSTODIAN_ADMIN_SECRET");
  CHECK(cust_engine_open((dir.path / "repo").c_str(), nullptr, CUST_OPEN_ENVIRONMENT, &e) == CUST_BOOTSTRAP_REQUIRED);
}
