#include "custodian/fault.hpp"

#include <array>
#include <atomic>
#include <cstdlib>

#include "custodian/error.hpp"

namespace custodian {

namespace {

constexpr std::array kPoints = {FaultPoint::BlobTempWritten, FaultPoint::BlobStored,
                                FaultPoint::LedgerAppend, FaultPoint::BeforeCommit,
                                FaultPoint::AfterCommit};

std::atomic<int> g_armed{-1};
std::atomic<int> g_action{0};
std::atomic<int> g_skip{0};

}  // namespace

std::span<const FaultPoint> all_fault_points() noexcept { return kPoints; }

std::string_view fault_point_name(FaultPoint p) noexcept {
  switch (p) {
    case FaultPoint::BlobTempWritten: return "blob-temp-written";
    case FaultPoint::BlobStored: return "blob-stored";
    case FaultPoint::LedgerAppend: return "ledger-append";
    case FaultPoint::BeforeCommit: return "before-commit";
    case FaultPoint::AfterCommit: return "after-commit";
  }
  return "unknown";
}

std::optional<FaultPoint> fault_point_from_name(std::string_view name) noexcept {
  for (auto p : kPoints) {
    if (fault_point_name(p) == name) return p;
  }
  return std::nullopt;
}

void arm_fault(FaultPoint point, FaultAction action, int skip) {
  g_action.store(static_cast<int>(action));
  g_skip.store(skip);
  g_armed.store(static_cast<int>(point));
}

void disarm_faults() noexcept { g_armed.store(-1); }

void fault_hook(FaultPoint point) {
  if (g_armed.load(std::memory_order_relaxed) != static_cast<int>(point)) return;
  if (g_skip.fetch_sub(1) > 0) return;
  if (static_cast<FaultAction>(g_action.load()) == FaultAction::Exit) {
    std::_Exit(kFaultExitStatus);
  }
  g_armed.store(-1);
  fail(ErrorCode::StorageFailure,
       "injected fault at " + std::string(fault_point_name(point)));
}

}  // namespace custodian
