#include <doctest.h>

#include <httplib.h>

#include "custodian/http.hpp"
#include "custodian/viewer.hpp"
#include "harness.hpp"

using namespace custodian;
using nlohmann::json;

namespace {

struct Service {
  explicit Service(bool manual_clock = false) : env(manual_clock), server(env.e(), "127.0.0.1", 0, false) {
    server.start();
    client = std::make_unique<httplib::Client>("127.0.0.1", server.port());
  }
  ~Service() { server.stop(); }

  std::string login(const std::string& user = th::kAdminUser, const std::string& secret = th::kAdminSecret) {
    auto r = client->Post("/api/v1/auth/login", json{{"username", user}, {"secret", secret}}.dump(),
                          "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    return json::parse(r->body)["token"].get<std::string>();
  }
  httplib::Headers auth(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

  th::Env env;
  http::Server server;
  std::unique_ptr<httplib::Client> client;
};

std::string error_code(const httplib::Result& r) { return json::parse(r->body)["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("loopback by default") {
  th::Env env;
  CHECK(http::is_loopback("127.0.0.1"));
  CHECK(http::is_loopback("::1"));
  CHECK(http::is_loopback("localhost"));
  CHECK_FALSE(http::is_loopback("0.0.0.0"));
  CHECK_FALSE(http::is_loopback("192.168.1.4"));
  try {
    http::Server s(env.e(), "0.0.0.0", 0, false);
    FAIL("bound a non-loopback address");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BindFailure);
  }
}

TEST_CASE("authentication over http") {
  Service svc;
  auto none = svc.client->Get("/api/v1/cases");
  REQUIRE(none);
  CHECK(none->status == 401);
  CHECK(error_code(none) == "AUTH_REQUIRED");

  auto bad = svc.client->Post("/api/v1/auth/login", R"({"username":"admin","secret":"nope"})", "application/json");
  CHECK(bad->status == 401);
  CHECK(error_code(bad) == "BAD_CREDENTIALS");

  auto token = svc.login();
  auto who = svc.client->Get("/api/v1/auth/whoami", svc.auth(token));
  CHECK(who->status == 200);
  CHECK(json::parse(who->body)["username"] == th::kAdminUser);
}

TEST_CASE("expired token") {
  Service svc(true);
  auto token = svc.login();
  svc.env.clock->advance(24LL * 3600 * 1000);
  auto r = svc.client->Get("/api/v1/cases", svc.auth(token));
  CHECK(r->status == 401);
  CHECK(error_code(r) == "AUTH_REQUIRED");
}

TEST_CASE("evidence over http") {
  Service svc;
  auto token = svc.login();
  auto h = svc.auth(token);
  auto created = svc.client->Post("/api/v1/cases", h, R"({"details":"web case"})", "application/json");
  REQUIRE(created->status == 200);
  auto case_id = json::parse(created->body)["id"].get<std::string>();

  std::string payload = "hello over http, with bytes \x01\x02\x03";
  auto up = svc.client->Post("/api/v1/cases/" + case_id + "/evidence?name=greeting.bin", h, payload,
                             "application/octet-stream");
  REQUIRE(up->status == 200);
  auto item = json::parse(up->body);
  auto eid = item["id"].get<std::string>();
  CHECK(item["size_bytes"] == payload.size());

  auto listed = svc.client->Get("/api/v1/cases/" + case_id + "/evidence", h);
  CHECK(json::parse(listed->body)["evidence"].size() == 1);

  auto raw = svc.client->Get("/api/v1/evidence/" + eid + "/raw?offset=0&length=5", h);
  CHECK(raw->body == "hello");

  auto text = svc.client->Get("/api/v1/evidence/" + eid + "/render/text?mode=HEX", h);
  REQUIRE(text->status == 200);
  std::vector<std::uint8_t> bytes(payload.begin(), payload.end());
  CHECK(text->body == viewer::render_hex(bytes, 0));

  auto verify = svc.client->Post("/api/v1/evidence/" + eid + "/verify", h, "", "application/json");
  CHECK(json::parse(verify->body)["outcome"] == "INTACT");

  auto missing = svc.client->Get("/api/v1/evidence/" + std::string(32, 'a'), h);
  CHECK(missing->status == 404);
  CHECK(error_code(missing) == "UNKNOWN_EVIDENCE");

  auto del = svc.client->Delete("/api/v1/evidence/" + eid, h);
  CHECK(del->status == 409);

  httplib::Headers with_sidecar = h;
  with_sidecar.emplace("X-Digest-Sidecar", std::string(40, '0'));
  auto imp = svc.client->Post("/api/v1/cases/" + case_id + "/evidence/import?name=x.bin", with_sidecar, "abc",
                              "application/octet-stream");
  CHECK(imp->status == 409);
  CHECK(error_code(imp) == "DIGEST_MISMATCH");

  auto chain = svc.client->Get("/api/v1/ledger/verify", h);
  CHECK(json::parse(chain->body)["status"] == "OK");
}

TEST_CASE("hidden cases look missing") {
  Service svc;
  auto admin = svc.login();
  svc.env.add_user("ivan", Role::Investigator, "ivan-secret");
  auto c = svc.env.new_case("private");
  auto token = svc.login("ivan", "ivan-secret");
  auto hidden = svc.client->Get("/api/v1/cases/" + c.id.str(), svc.auth(token));
  auto absent = svc.client->Get("/api/v1/cases/" + std::string(32, 'b'), svc.auth(token));
  CHECK(hidden->status == 404);
  CHECK(absent->status == 404);
  CHECK(error_code(hidden) == error_code(absent));
  auto listed = svc.client->Get("/api/v1/cases", svc.auth(token));
  CHECK(json::parse(listed->body)["cases"].empty());
  (void)admin;
}

TEST_CASE("generic rpc endpoint") {
  Service svc;
  auto token = svc.login();
  auto r = svc.client->Post("/api/v1/rpc/system.info", svc.auth(token), "{}", "application/json");
  CHECK(r->status == 200);
  auto bad = svc.client->Post("/api/v1/rpc/no.such.op", svc.auth(token), "{}", "application/json");
  CHECK(bad->status == 400);
}
