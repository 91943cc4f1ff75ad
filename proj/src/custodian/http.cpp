#include "custodian/http.hpp"

#include <arpa/inet.h>

#include <httplib.h>

namespace custodian::http {

using nlohmann::json;

const std::vector<Route>& routes() {
  static const std::vector<Route> r = {
      {"POST", "/api/v1/auth/login", "auth.login"},
      {"POST", "/api/v1/auth/logout", "auth.logout"},
      {"GET", "/api/v1/auth/whoami", "auth.whoami"},
      {"GET", "/api/v1/system/info", "system.info"},

      {"GET", "/api/v1/cases", "cases.list"},
      {"POST", "/api/v1/cases", "cases.create"},
      {"GET", "/api/v1/cases/:case_id", "cases.get"},
      {"POST", "/api/v1/cases/:case_id/close", "cases.close"},
      {"POST", "/api/v1/cases/:case_id/investigators", "cases.add_investigator"},
      {"GET", "/api/v1/cases/:case_id/sections", "cases.sections.get"},
      {"PUT", "/api/v1/cases/:case_id/sections/:section", "cases.sections.set"},
      {"GET", "/api/v1/cases/:case_id/notes", "notes.list"},
      {"POST", "/api/v1/cases/:case_id/notes", "notes.attach"},

      {"GET", "/api/v1/cases/:case_id/evidence", "evidence.list"},
      {"POST", "/api/v1/cases/:case_id/evidence", "evidence.ingest", true},
      {"POST", "/api/v1/cases/:case_id/evidence/import", "evidence.import", true},
      {"GET", "/api/v1/evidence/:evidence_id", "evidence.get"},
      {"DELETE", "/api/v1/evidence/:evidence_id", "evidence.delete"},
      {"GET", "/api/v1/evidence/:evidence_id/window", "evidence.read"},
      {"GET", "/api/v1/evidence/:evidence_id/raw", "evidence.read", false, true},
      {"GET", "/api/v1/evidence/:evidence_id/render", "evidence.render"},
      {"GET", "/api/v1/evidence/:evidence_id/render/text", "evidence.render", false, true},
      {"POST", "/api/v1/evidence/:evidence_id/verify", "evidence.verify"},
      {"POST", "/api/v1/evidence/:evidence_id/clone", "evidence.clone"},
      {"POST", "/api/v1/evidence/:evidence_id/extract", "evidence.extract"},
      {"GET", "/api/v1/evidence/:evidence_id/events", "evidence.events"},

      {"GET", "/api/v1/plugins", "plugins.list"},
      {"GET", "/api/v1/plugins/:plugin_id", "plugins.get"},
      {"GET", "/api/v1/plugins/:plugin_id/defaults", "plugins.defaults.get"},
      {"PUT", "/api/v1/plugins/:plugin_id/defaults", "plugins.defaults.set"},
      {"POST", "/api/v1/cases/:case_id/plugins/:plugin_id/run", "plugins.run"},
      {"POST", "/api/v1/cases/:case_id/batch", "plugins.batch"},
      {"GET", "/api/v1/cases/:case_id/invocations", "plugins.invocations"},

      {"GET", "/api/v1/ledger", "ledger.list"},
      {"GET", "/api/v1/ledger/verify", "ledger.verify"},
      {"GET", "/api/v1/ledger/export", "ledger.export", false, true},

      {"POST", "/api/v1/cases/:case_id/reports", "reports.generate", false, true},
      {"GET", "/api/v1/cases/:case_id/reports", "reports.list"},
      {"GET", "/api/v1/reports/:event_seq", "reports.download", false, true},

      {"GET", "/api/v1/admin/principals", "admin.principals.list"},
      {"POST", "/api/v1/admin/principals", "admin.principals.create"},
      {"GET", "/api/v1/admin/acl", "admin.acl.list"},
      {"POST", "/api/v1/admin/acl", "admin.acl.grant"},
      {"DELETE", "/api/v1/admin/acl", "admin.acl.revoke"},
      {"GET", "/api/v1/admin/defaults", "admin.defaults.get"},
      {"PUT", "/api/v1/admin/defaults", "admin.defaults.set"},

      // Any operation by name, arguments as the JSON body.
      {"POST", "/api/v1/rpc/:op", ""},
  };
  return r;
}

bool is_loopback(const std::string& address) {
  if (address == "localhost") return true;
  in_addr v4{};
  if (inet_pton(AF_INET, address.c_str(), &v4) == 1) return (ntohl(v4.s_addr) >> 24) == 127;
  in6_addr v6{};
  if (inet_pton(AF_INET6, address.c_str(), &v6) == 1) return IN6_IS_ADDR_LOOPBACK(&v6);
  return false;
}

namespace {

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = api::http_status(code);
  res.set_content(api::error_json(code, message).dump(), "application/json");
}

std::optional<std::string> bearer(const httplib::Request& req) {
  auto h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() > prefix.size() && h.compare(0, prefix.size(), prefix) == 0) return h.substr(prefix.size());
  return std::nullopt;
}

json build_args(const Route& route, const httplib::Request& req) {
  json args = json::object();
  if (!route.raw_body && !req.body.empty()) {
    try {
      args = json::parse(req.body);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
    }
    if (!args.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
  }
  for (const auto& [key, value] : req.params) {
    if (!args.contains(key)) args[key] = value;
  }
  if (route.op == "evidence.import" && !args.contains("sidecar") && req.has_header("X-Digest-Sidecar")) {
    args["sidecar"] = req.get_header_value("X-Digest-Sidecar");
  }
  for (const auto& [key, value] : req.path_params) {
    if (key != "op") args[key] = value;
  }
  return args;
}

}  // namespace

Server::Server(Engine& engine, const std::string& address, int port, bool allow_remote,
               const std::filesystem::path& static_dir)
    : engine_(engine), dispatcher_(engine), server_(std::make_unique<httplib::Server>()), address_(address) {
  if (!allow_remote && !is_loopback(address)) {
    fail(ErrorCode::BindFailure, "refusing to bind non-loopback address " + address + " without allow_remote");
  }
  install();
  if (!static_dir.empty() && !server_->set_mount_point("/", static_dir.string())) {
    fail(ErrorCode::BindFailure, "static directory " + static_dir.string() + " does not exist");
  }
  if (port == 0) {
    port_ = server_->bind_to_any_port(address);
    if (port_ <= 0) fail(ErrorCode::BindFailure, "cannot bind " + address);
  } else {
    if (!server_->bind_to_port(address, port)) {
      fail(ErrorCode::BindFailure, "cannot bind " + address + ":" + std::to_string(port));
    }
    port_ = port;
  }
}

Server::~Server() {
  stop();
  if (thread_.joinable()) thread_.join();
}

void Server::install() {
  server_->set_payload_max_length(std::size_t{1} << 32);
  for (const auto& route : routes()) {
    httplib::Server::Handler handler = [this, &route](const httplib::Request& req, httplib::Response& res) {
      try {
        api::Request call;
        call.op = route.op.empty() ? req.path_params.at("op") : route.op;
        call.args = build_args(route, req);
        call.token = bearer(req);
        if (route.raw_body) {
          call.body = std::span(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size());
        }
        auto out = dispatcher_.call(call);
        res.status = 200;
        if (route.binary_response && out.bytes) {
          res.set_content(reinterpret_cast<const char*>(out.bytes->data()), out.bytes->size(),
                          out.media_type.empty() ? "application/octet-stream" : out.media_type);
          if (!out.file_name.empty()) {
            res.set_header("Content-Disposition", "attachment; filename=\"" + out.file_name + "\"");
          }
          if (out.body.contains("event_seq")) res.set_header("X-Event-Seq", out.body["event_seq"].dump());
        } else {
          res.set_content(out.body.dump(), "application/json");
        }
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::Internal, e.what());
      }
    };
    if (route.method == "GET") server_->Get(route.path, handler);
    else if (route.method == "POST") server_->Post(route.path, handler);
    else if (route.method == "PUT") server_->Put(route.path, handler);
    else server_->Delete(route.path, handler);
  }
}

void Server::start() {
  if (thread_.joinable()) return;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Server::stop() {
  if (server_) server_->stop();
}

void Server::wait() {
  if (thread_.joinable()) {
    thread_.join();
  } else {
    server_->listen_after_bind();
  }
}

}  // namespace custodian::http
