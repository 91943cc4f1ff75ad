#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "custodian/engine.hpp"

namespace custodian::api {

using nlohmann::json;

// One operation call. Every front end (C API, CLI, HTTP) goes through
// Dispatcher::call, so each surface reaches the same domain operation.
struct Request {
  std::string op;
  json args = json::object();
  std::optional<std::string> token;
  std::span<const std::uint8_t> body;  // raw upload, when any
  // In-process callers may name local files ("path", "sidecar_path");
  // network callers may not.
  bool local = false;
};

struct Response {
  json body = json::object();
  std::optional<std::vector<std::uint8_t>> bytes;  // binary payload, when any
  std::string media_type;
  std::string file_name;
};

class Dispatcher {
 public:
  explicit Dispatcher(Engine& engine) : engine_(engine) {}

  // Throws custodian::Error.
  Response call(const Request& request);

  static const std::vector<std::string>& operations();

 private:
  Engine& engine_;
};

json error_json(ErrorCode code, const std::string& message);

// HTTP status for a domain error.
int http_status(ErrorCode code) noexcept;

}  // namespace custodian::api
