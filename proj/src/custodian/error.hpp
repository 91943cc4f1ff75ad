#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace custodian {

// Stable machine-readable error codes. The numeric values are part of the
// C ABI (see include/custodian/custodian.h) and must never be renumbered.
enum class ErrorCode : int {
  Ok = 0,
  UnknownCase = 1,
  UnknownEvidence = 2,
  UnknownPrincipal = 3,
  UnknownObject = 4,
  UnknownTarget = 5,
  UnknownPlugin = 6,
  AccessDenied = 7,
  BadCredentials = 8,
  AuthRequired = 9,
  StorageFailure = 10,
  DigestMismatch = 11,
  DigestUnparseable = 12,
  SourceCorrupt = 13,
  RangeOutOfBounds = 14,
  EmptyBody = 15,
  InvalidArgument = 16,
  ParamInvalid = 17,
  PlanInvalid = 18,
  ManifestInvalid = 19,
  ToolFailed = 20,
  Timeout = 21,
  LatexEngineMissing = 22,
  LatexCompileFailed = 23,
  ReferentialFailure = 24,
  IncompatibleVersion = 25,
  Locked = 26,
  BindFailure = 27,
  CaseClosed = 28,
  BootstrapRequired = 29,
  Duplicate = 30,
  DeletionRefused = 31,
  IntegrityFailure = 32,
  Internal = 33,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace custodian
