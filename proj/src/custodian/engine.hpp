#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "custodian/accessctl.hpp"
#include "custodian/cases.hpp"
#include "custodian/clock.hpp"
#include "custodian/context.hpp"
#include "custodian/ledger.hpp"
#include "custodian/plugins.hpp"
#include "custodian/reports.hpp"
#include "custodian/repository.hpp"
#include "custodian/vault.hpp"

namespace custodian {

// Engine settings. Sources, later ones winning: built-in defaults, the
// key=value config file, CUSTODIAN_* environment variables, explicit calls.
struct EngineConfig {
  std::filesystem::path repo;
  std::string bind_address = "127.0.0.1";
  int port = 8765;
  bool allow_remote = false;  // must be set to bind a non-loopback address
  std::chrono::minutes session_lifetime{8 * 60};
  std::chrono::seconds plugin_timeout{600};
  std::string latex_engine;
  std::vector<std::filesystem::path> plugin_dirs;  // searched after <repo>/plugins
  std::filesystem::path static_dir;                // web UI assets, optional
  int kdf_iterations = 100'000;
  std::optional<std::string> admin_user;
  std::optional<std::string> admin_secret;

  // Applies one key (any of keys(), plus admin_user and admin_secret); unknown keys and bad values throw INVALID_ARGUMENT.
  void set(const std::string& key, const std::string& value);
  // Parses key=value lines; '#' starts a comment line.
  void apply_file(const std::filesystem::path& file);
  void apply_text(std::string_view text);
  // CUSTODIAN_<KEY> for every key, plus CUSTODIAN_ADMIN_USER/SECRET.
  void apply_environment();

  static const std::vector<std::string>& keys();
};

class Engine {
 public:
  // Opens (creating when needed) the repository, registers plugins and
  // bootstraps the first administrator when the principal store is empty.
  static std::unique_ptr<Engine> open(const EngineConfig& config, std::shared_ptr<const Clock> clock = nullptr);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  [[nodiscard]] const EngineConfig& config() const noexcept { return config_; }
  [[nodiscard]] Repository& repo() noexcept { return *repo_; }
  [[nodiscard]] Ledger& ledger() noexcept { return *ledger_; }
  [[nodiscard]] AccessControl& access() noexcept { return *access_; }
  [[nodiscard]] CaseService& cases() noexcept { return *cases_; }
  [[nodiscard]] Vault& vault() noexcept { return *vault_; }
  [[nodiscard]] PluginRegistry& registry() noexcept { return *registry_; }
  [[nodiscard]] PluginService& plugins() noexcept { return *plugins_; }
  [[nodiscard]] ReportGenerator& reports() noexcept { return *reports_; }
  [[nodiscard]] const Clock& clock() const noexcept { return *clock_; }
  [[nodiscard]] Context context() noexcept;

 private:
  explicit Engine(EngineConfig config) : config_(std::move(config)) {}

  EngineConfig config_;
  std::shared_ptr<const Clock> clock_;
  std::unique_ptr<Repository> repo_;
  std::unique_ptr<Ledger> ledger_;
  std::unique_ptr<AccessControl> access_;
  std::unique_ptr<CaseLocks> locks_;
  std::unique_ptr<CaseService> cases_;
  std::unique_ptr<Vault> vault_;
  std::unique_ptr<PluginRegistry> registry_;
  std::unique_ptr<PluginService> plugins_;
  std::unique_ptr<ReportGenerator> reports_;
};

}  // namespace custodian
