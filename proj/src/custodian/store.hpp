#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "custodian/fault.hpp"
#include "custodian/sqlite.hpp"

namespace custodian::store {

struct Migration {
  int version;
  std::string sql;
};

// The engine's forward-only migration list.
std::span<const Migration> builtin_migrations();

// Transactional metadata store: one serialized write connection plus a pool of
// read connections. WAL journaling lets readers see a consistent snapshot
// while a writer is active.
class Store {
 public:
  static std::unique_ptr<Store> open(const std::filesystem::path& db_path,
                                     std::span<const Migration> migrations);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  [[nodiscard]] int schema_version() const noexcept { return version_; }
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

  // Runs work(Database&) inside BEGIN IMMEDIATE ... COMMIT; any exception
  // rolls the transaction back and propagates.
  template <class F>
  decltype(auto) write(F&& work);

  // Runs work(Database&) inside a read transaction on a pooled connection.
  template <class F>
  decltype(auto) read(F&& work) const;

  [[nodiscard]] bool in_write_transaction() const noexcept;

 private:
  Store(std::filesystem::path path, Database writer, int version);

  class ReadLease {
   public:
    ReadLease(const Store& store, std::unique_ptr<Database> db) : store_(store), db_(std::move(db)) {}
    ~ReadLease();
    Database& db() { return *db_; }

   private:
    const Store& store_;
    std::unique_ptr<Database> db_;
  };
  ReadLease lease() const;
  void begin_write();
  void commit_write();
  void rollback_write() noexcept;

  std::filesystem::path path_;
  Database writer_;
  int version_;
  std::recursive_mutex write_mu_;
  mutable std::mutex pool_mu_;
  mutable std::vector<std::unique_ptr<Database>> pool_;
};

template <class F>
decltype(auto) Store::write(F&& work) {
  std::lock_guard lock(write_mu_);
  if (in_write_transaction()) {
    // Nested call on the owning thread joins the outer transaction.
    return work(writer_);
  }
  begin_write();
  try {
    if constexpr (std::is_void_v<decltype(work(writer_))>) {
      work(writer_);
      fault_hook(FaultPoint::BeforeCommit);
      commit_write();
      fault_hook(FaultPoint::AfterCommit);
    } else {
      decltype(auto) result = work(writer_);
      fault_hook(FaultPoint::BeforeCommit);
      commit_write();
      fault_hook(FaultPoint::AfterCommit);
      return result;
    }
  } catch (...) {
    rollback_write();
    throw;
  }
}

template <class F>
decltype(auto) Store::read(F&& work) const {
  auto l = lease();
  l.db().exec("BEGIN");
  try {
    if constexpr (std::is_void_v<decltype(work(l.db()))>) {
      work(l.db());
      l.db().exec("COMMIT");
    } else {
      decltype(auto) result = work(l.db());
      l.db().exec("COMMIT");
      return result;
    }
  } catch (...) {
    try {
      l.db().exec("ROLLBACK");
    } catch (...) {
    }
    throw;
  }
}

}  // namespace custodian::store
