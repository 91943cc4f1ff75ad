#pragma once

#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "custodian/api.hpp"
#include "custodian/engine.hpp"

namespace httplib {
class Server;
}

namespace custodian::http {

struct Route {
  std::string method;  // GET, POST, PUT, DELETE
  std::string path;    // httplib pattern with :name segments
  std::string op;      // dispatcher operation
  bool raw_body = false;        // request body is an upload, not JSON arguments
  bool binary_response = false;  // reply with Response::bytes
};

// The REST surface; also used to generate the endpoint reference.
const std::vector<Route>& routes();

bool is_loopback(const std::string& address);

class Server {
 public:
  // Binds immediately; BIND_FAILURE when the address is taken, non-loopback
  // without allow_remote, or otherwise unusable. Port 0 picks a free port.
  Server(Engine& engine, const std::string& address, int port, bool allow_remote,
         const std::filesystem::path& static_dir = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] const std::string& address() const noexcept { return address_; }

  // Serves on a background thread.
  void start();
  void stop();
  // Blocks until stop() is called from elsewhere.
  void wait();

 private:
  void install();

  Engine& engine_;
  api::Dispatcher dispatcher_;
  std::unique_ptr<httplib::Server> server_;
  std::string address_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace custodian::http
