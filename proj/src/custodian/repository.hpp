#pragma once

#include <filesystem>
#include <memory>
#include <span>

#include "custodian/store.hpp"

namespace custodian {

struct RepositoryLayout {
  std::filesystem::path root;
  std::filesystem::path meta;           // metadata store + lock file
  std::filesystem::path objects;        // content-addressed evidence blobs
  std::filesystem::path plugins;        // installed plugin directories
  std::filesystem::path ledger_export;  // ledger export files
  std::filesystem::path work;           // scratch space for tool runs
  std::filesystem::path reports;        // generated report artifacts, by sha256

  static RepositoryLayout under(const std::filesystem::path& root);
  [[nodiscard]] std::filesystem::path database() const { return meta / "custodian.db"; }
  [[nodiscard]] std::filesystem::path lock_file() const { return meta / "lock"; }
};

// Exclusive advisory lock on the repository; released on destruction.
class RepositoryLock {
 public:
  static RepositoryLock acquire(const std::filesystem::path& lock_file);
  ~RepositoryLock();
  RepositoryLock(RepositoryLock&& other) noexcept;
  RepositoryLock& operator=(RepositoryLock&&) = delete;
  RepositoryLock(const RepositoryLock&) = delete;

 private:
  explicit RepositoryLock(int fd) : fd_(fd) {}
  int fd_;
};

class Repository {
 public:
  // Creates the directory layout when missing, takes the lock, opens the store
  // and applies pending migrations.
  static std::unique_ptr<Repository> open(
      const std::filesystem::path& root,
      std::span<const store::Migration> migrations = store::builtin_migrations());

  [[nodiscard]] const RepositoryLayout& layout() const noexcept { return layout_; }
  [[nodiscard]] store::Store& store() noexcept { return *store_; }
  [[nodiscard]] const store::Store& store() const noexcept { return *store_; }

 private:
  Repository(RepositoryLayout layout, RepositoryLock lock, std::unique_ptr<store::Store> store)
      : layout_(std::move(layout)), lock_(std::move(lock)), store_(std::move(store)) {}

  RepositoryLayout layout_;
  RepositoryLock lock_;
  std::unique_ptr<store::Store> store_;
};

}  // namespace custodian
