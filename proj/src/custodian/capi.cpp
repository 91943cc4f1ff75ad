#include "custodian/custodian.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "custodian/api.hpp"
#include "custodian/engine.hpp"
#include "custodian/http.hpp"
#include "custodian/version.hpp"

using namespace custodian;

struct cust_engine {
  std::unique_ptr<Engine> engine;
  std::unique_ptr<api::Dispatcher> dispatcher;
};

struct cust_result {
  std::string json;
  std::optional<std::vector<std::uint8_t>> bytes;
  std::string media_type;
};

struct cust_server {
  std::unique_ptr<http::Server> server;
};

namespace {

thread_local std::string last_error;

cust_status to_status(ErrorCode code) { return static_cast<cust_status>(static_cast<int>(code)); }

template <class F>
cust_status guarded(F&& f) noexcept {
  try {
    last_error.clear();
    f();
    return CUST_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CUST_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CUST_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return CUST_INTERNAL;
  }
}

cust_status null_arg(const char* what) {
  last_error = std::string(what) + " must not be NULL";
  return CUST_INVALID_ARGUMENT;
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* cust_version(void) { return kVersion; }

const char* cust_status_name(cust_status status) {
  if (status < CUST_OK || status > CUST_INTERNAL) return "UNKNOWN_STATUS";
  // error_code_name returns views of string literals, so data() is NUL-terminated.
  return error_code_name(static_cast<ErrorCode>(status)).data();
}

const char* cust_last_error(void) { return last_error.c_str(); }

cust_status cust_engine_open(const char* repo, const char* config_text, unsigned flags, cust_engine** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    EngineConfig config;
    if (config_text) config.apply_text(config_text);
    if (flags & CUST_OPEN_ENVIRONMENT) config.apply_environment();
    if (repo) config.repo = repo;
    auto handle = std::make_unique<cust_engine>();
    handle->engine = Engine::open(config);
    handle->dispatcher = std::make_unique<api::Dispatcher>(*handle->engine);
    *out = handle.release();
  });
}

void cust_engine_close(cust_engine* engine) { delete engine; }

cust_status cust_login(cust_engine* engine, const char* username, const char* secret, char** token_out) {
  if (!engine) return null_arg("engine");
  if (!username || !secret) return null_arg("credentials");
  if (!token_out) return null_arg("token_out");
  *token_out = nullptr;
  return guarded([&] {
    auto token = engine->engine->access().authenticate(username, secret);
    *token_out = dup(token.token);
  });
}

cust_status cust_logout(cust_engine* engine, const char* token) {
  if (!engine) return null_arg("engine");
  if (!token) return null_arg("token");
  return guarded([&] { engine->engine->access().logout(token); });
}

cust_status cust_call(cust_engine* engine, const char* token, const char* op, const char* args_json,
                      const uint8_t* input, size_t input_len, cust_result** out) {
  if (!engine) return null_arg("engine");
  if (!op) return null_arg("op");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    api::Request req;
    req.op = op;
    req.local = true;
    if (token) req.token = token;
    if (args_json && *args_json) {
      try {
        req.args = api::json::parse(args_json);
      } catch (const api::json::parse_error& e) {
        fail(ErrorCode::InvalidArgument, std::string("arguments are not valid JSON: ") + e.what());
      }
    }
    if (input && input_len) req.body = std::span(input, input_len);
    auto resp = engine->dispatcher->call(req);
    auto result = std::make_unique<cust_result>();
    result->json = resp.body.dump();
    result->bytes = std::move(resp.bytes);
    result->media_type = std::move(resp.media_type);
    *out = result.release();
  });
}

const char* cust_result_json(const cust_result* result) { return result ? result->json.c_str() : "{}"; }

const uint8_t* cust_result_bytes(const cust_result* result, size_t* len) {
  if (len) *len = 0;
  if (!result || !result->bytes) return nullptr;
  if (len) *len = result->bytes->size();
  return result->bytes->data();
}

const char* cust_result_media_type(const cust_result* result) {
  return result ? result->media_type.c_str() : "";
}

void cust_result_free(cust_result* result) { delete result; }

const char* cust_operations(void) {
  static const std::string joined = [] {
    std::string s;
    for (const auto& op : api::Dispatcher::operations()) s += op + "\n";
    return s;
  }();
  return joined.c_str();
}

cust_status cust_serve(cust_engine* engine, const char* address, int port, int allow_remote, const char* static_dir,
                       cust_server** out, int* port_out) {
  if (!engine) return null_arg("engine");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const auto& cfg = engine->engine->config();
    std::string addr = address ? address : cfg.bind_address;
    std::filesystem::path dir = static_dir ? std::filesystem::path(static_dir) : cfg.static_dir;
    auto handle = std::make_unique<cust_server>();
    handle->server = std::make_unique<http::Server>(*engine->engine, addr, port < 0 ? cfg.port : port,
                                                   allow_remote != 0 || cfg.allow_remote, dir);
    handle->server->start();
    if (port_out) *port_out = handle->server->port();
    *out = handle.release();
  });
}

void cust_server_stop(cust_server* server) {
  if (server) server->server->stop();
}

void cust_server_wait(cust_server* server) {
  if (!server) return;
  server->server->wait();
  delete server;
}

cust_status cust_ledger_verify_export(const char* path, uint64_t* events, uint64_t* broken_at) {
  if (!path) return null_arg("path");
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::InvalidArgument, std::string("cannot read ") + path);
    auto status = Ledger::verify_export(in);
    if (events) *events = status.events;
    if (broken_at) *broken_at = status.ok ? 0 : status.broken_at;
    if (!status.ok) {
      fail(ErrorCode::IntegrityFailure, "chain broken at seq " + std::to_string(status.broken_at));
    }
  });
}

void cust_free(void* p) { std::free(p); }

}  // extern "C"
