#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace custodian {

// Named kill-points on the mutation path. Tests arm one point; when execution
// reaches it the injector either throws (simulated I/O failure) or terminates
// the process without unwinding (simulated crash).
enum class FaultPoint {
  BlobTempWritten,  // temp file written and fsynced, not yet renamed
  BlobStored,       // blob renamed into place, metadata not yet written
  LedgerAppend,     // inside the transaction, before the event row insert
  BeforeCommit,     // all rows written, COMMIT not yet issued
  AfterCommit,      // transaction committed
};

enum class FaultAction { Throw, Exit };

std::span<const FaultPoint> all_fault_points() noexcept;
std::string_view fault_point_name(FaultPoint p) noexcept;
std::optional<FaultPoint> fault_point_from_name(std::string_view name) noexcept;

void arm_fault(FaultPoint point, FaultAction action, int skip = 0);
void disarm_faults() noexcept;

// Called at each kill-point. No-op unless that point is armed.
void fault_hook(FaultPoint point);

inline constexpr int kFaultExitStatus = 86;

}  // namespace custodian
