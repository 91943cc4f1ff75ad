#include "custodian/repository.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "custodian/error.hpp"

namespace custodian {

namespace fs = std::filesystem;

RepositoryLayout RepositoryLayout::under(const fs::path& root) {
  fs::path abs = fs::absolute(root).lexically_normal();
  return {abs, abs / "meta", abs / "objects", abs / "plugins", abs / "ledger-export", abs / "work", abs / "reports"};
}

RepositoryLock RepositoryLock::acquire(const fs::path& lock_file) {
  int fd = ::open(lock_file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
  if (fd < 0) {
    fail(ErrorCode::StorageFailure,
         "cannot open lock file " + lock_file.string() + ": " + std::strerror(errno));
  }
  // flock locks belong to the open file description, so a second open in the
  // same process conflicts just like another process would.
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd);
    fail(ErrorCode::Locked, "repository is in use by another engine instance");
  }
  return RepositoryLock(fd);
}

RepositoryLock::~RepositoryLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

RepositoryLock::RepositoryLock(RepositoryLock&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

std::unique_ptr<Repository> Repository::open(const fs::path& root,
                                             std::span<const store::Migration> migrations) {
  auto layout = RepositoryLayout::under(root);
  std::error_code ec;
  for (const auto& dir : {layout.root, layout.meta, layout.objects, layout.objects / "tmp",
                          layout.plugins, layout.ledger_export, layout.work, layout.reports}) {
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
  }
  auto lock = RepositoryLock::acquire(layout.lock_file());
  auto store = store::Store::open(layout.database(), migrations);
  return std::unique_ptr<Repository>(new Repository(std::move(layout), std::move(lock), std::move(store)));
}

}  // namespace custodian
