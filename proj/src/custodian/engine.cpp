#include "custodian/engine.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace custodian {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

long long to_int(const std::string& key, const std::string& value, long long min, long long max) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || v < min || v > max) {
    fail(ErrorCode::InvalidArgument, "config " + key + ": expected an integer in [" + std::to_string(min) + ", " +
                                         std::to_string(max) + "], got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorCode::InvalidArgument, "config " + key + ": expected true or false");
}

}  // namespace

const std::vector<std::string>& EngineConfig::keys() {
  static const std::vector<std::string> k{"repo",           "bind_address",    "port",
                                          "allow_remote",   "session_minutes", "plugin_timeout_seconds",
                                          "latex_engine",   "plugin_dirs",     "static_dir",
                                          "kdf_iterations"};
  return k;
}

void EngineConfig::set(const std::string& key, const std::string& value) {
  if (key == "repo") {
    repo = value;
  } else if (key == "bind_address") {
    bind_address = value;
  } else if (key == "port") {
    port = static_cast<int>(to_int(key, value, 0, 65535));
  } else if (key == "allow_remote") {
    allow_remote = to_bool(key, value);
  } else if (key == "session_minutes") {
    session_lifetime = std::chrono::minutes(to_int(key, value, 1, 10LL * 365 * 24 * 60));
  } else if (key == "plugin_timeout_seconds") {
    plugin_timeout = std::chrono::seconds(to_int(key, value, 1, 7LL * 24 * 3600));
  } else if (key == "latex_engine") {
    latex_engine = value;
  } else if (key == "plugin_dirs") {
    plugin_dirs.clear();
    std::string_view rest(value);
    while (!rest.empty()) {
      auto colon = rest.find(':');
      auto part = trim(rest.substr(0, colon));
      if (!part.empty()) plugin_dirs.emplace_back(part);
      if (colon == std::string_view::npos) break;
      rest.remove_prefix(colon + 1);
    }
  } else if (key == "static_dir") {
    static_dir = value;
  } else if (key == "admin_user") {
    admin_user = value;
  } else if (key == "admin_secret") {
    admin_secret = value;
  } else if (key == "kdf_iterations") {
    kdf_iterations = static_cast<int>(to_int(key, value, AccessControl::kMinIterations, 100'000'000));
  } else {
    fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
}

void EngineConfig::apply_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + ": expected key=value");
    }
    set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
}

void EngineConfig::apply_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str());
}

void EngineConfig::apply_environment() {
  for (const auto& key : keys()) {
    std::string var = "CUSTODIAN_";
    for (char c : key) var.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (const char* v = std::getenv(var.c_str())) set(key, v);
  }
  if (const char* v = std::getenv("CUSTODIAN_ADMIN_USER")) admin_user = v;
  if (const char* v = std::getenv("CUSTODIAN_ADMIN_SECRET")) admin_secret = v;
}

// ---------------------------------------------------------------------------

Engine::~Engine() = default;

Context Engine::context() noexcept {
  return Context{*repo_, repo_->store(), *ledger_, *access_, *clock_, *locks_};
}

std::unique_ptr<Engine> Engine::open(const EngineConfig& config, std::shared_ptr<const Clock> clock) {
  if (config.repo.empty()) fail(ErrorCode::InvalidArgument, "no repository path configured");
  std::unique_ptr<Engine> e(new Engine(config));
  e->clock_ = clock ? std::move(clock) : std::make_shared<SystemClock>();
  e->repo_ = Repository::open(config.repo);
  auto& store = e->repo_->store();
  e->ledger_ = std::make_unique<Ledger>(store, *e->clock_);
  AccessControlConfig ac;
  ac.session_idle = std::chrono::duration_cast<std::chrono::milliseconds>(config.session_lifetime);
  ac.kdf_iterations = config.kdf_iterations;
  e->access_ = std::make_unique<AccessControl>(store, *e->ledger_, *e->clock_, ac);

  if (!e->access_->has_principals()) {
    if (!config.admin_user || config.admin_user->empty() || !config.admin_secret || config.admin_secret->empty()) {
      fail(ErrorCode::BootstrapRequired,
           "the repository has no principals; set CUSTODIAN_ADMIN_USER and CUSTODIAN_ADMIN_SECRET");
    }
    store.write([&](store::Database& db) {
      auto admin = e->access_->insert_principal(db, *config.admin_user, *config.admin_user, Role::Administrator,
                                                *config.admin_secret);
      e->ledger_->append(db, EventDraft{.principal = admin.id,
                                        .kind = EventKind::AclChange,
                                        .description = "bootstrap administrator '" + admin.username + "' created"});
    });
  }

  e->locks_ = std::make_unique<CaseLocks>();
  auto ctx = e->context();
  e->cases_ = std::make_unique<CaseService>(ctx);
  e->vault_ = std::make_unique<Vault>(ctx, BlobStore(e->repo_->layout().objects));
  e->registry_ = std::make_unique<PluginRegistry>();
  e->registry_->register_plugins(e->repo_->layout().plugins);
  for (const auto& dir : config.plugin_dirs) e->registry_->register_plugins(dir);
  e->plugins_ = std::make_unique<PluginService>(ctx, *e->vault_, *e->registry_, PluginConfig{config.plugin_timeout});
  e->reports_ = std::make_unique<ReportGenerator>(ctx, *e->vault_, ReportConfig{config.latex_engine, {}});
  return e;
}

}  // namespace custodian
