#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>

#include "custodian/accessctl.hpp"
#include "custodian/clock.hpp"
#include "custodian/ledger.hpp"
#include "custodian/repository.hpp"

namespace custodian {

// One mutex per case: mutating operations on a case are serialized, different
// cases proceed in parallel.
class CaseLocks {
 public:
  std::shared_ptr<std::mutex> for_case(const CaseId& id) {
    std::lock_guard lock(mu_);
    auto& slot = locks_[id];
    if (!slot) slot = std::make_shared<std::mutex>();
    return slot;
  }

 private:
  std::mutex mu_;
  std::unordered_map<CaseId, std::shared_ptr<std::mutex>> locks_;
};

class CaseGuard {
 public:
  CaseGuard(CaseLocks& locks, const CaseId& id) : mu_(locks.for_case(id)), lock_(*mu_) {}

 private:
  std::shared_ptr<std::mutex> mu_;
  std::unique_lock<std::mutex> lock_;
};

struct Context {
  Repository& repo;
  store::Store& store;
  Ledger& ledger;
  AccessControl& access;
  const Clock& clock;
  CaseLocks& locks;
};

}  // namespace custodian
