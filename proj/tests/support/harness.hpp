#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "custodian/engine.hpp"

namespace th {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

fs::path source_dir();
fs::path fixtures_dir();

inline constexpr const char* kAdminUser = "admin";
inline constexpr const char* kAdminSecret = "admin-secret-1";

custodian::EngineConfig config_for(const fs::path& repo);

// An engine over a scratch repository with the shipped and fixture plugins.
struct Env {
  explicit Env(bool manual_clock = false);
  ~Env();

  void reopen();
  void close();

  custodian::PrincipalId add_user(const std::string& name, custodian::Role role,
                                  const std::string& secret = "user-secret-1");
  custodian::Case new_case(const std::string& details = "case", const custodian::PrincipalId* by = nullptr);
  custodian::EvidenceItem ingest(const custodian::CaseId& c, const std::vector<std::uint8_t>& bytes,
                                 const std::string& name = "item.bin");

  custodian::Engine& e() { return *engine; }

  TempDir dir;
  fs::path repo;
  std::shared_ptr<custodian::ManualClock> clock;
  std::unique_ptr<custodian::Engine> engine;
  custodian::PrincipalId admin;
};

std::vector<std::uint8_t> random_buffer(std::mt19937_64& rng, std::size_t n);
std::string read_text(const fs::path& file);
std::vector<std::uint8_t> read_bytes(const fs::path& file);
void write_bytes(const fs::path& file, const std::vector<std::uint8_t>& bytes);

// Removes the append-only triggers, as someone with write access to the
// database file could, so tests can edit recorded events directly.
void drop_append_guard(custodian::store::Database& db);

// Resident set size in pages, from /proc/self/statm.
std::uint64_t rss_pages();

}  // namespace th
