#include "custodian/error.hpp"

namespace custodian {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "OK";
    case ErrorCode::UnknownCase: return "UNKNOWN_CASE";
    case ErrorCode::UnknownEvidence: return "UNKNOWN_EVIDENCE";
    case ErrorCode::UnknownPrincipal: return "UNKNOWN_PRINCIPAL";
    case ErrorCode::UnknownObject: return "UNKNOWN_OBJECT";
    case ErrorCode::UnknownTarget: return "UNKNOWN_TARGET";
    case ErrorCode::UnknownPlugin: return "UNKNOWN_PLUGIN";
    case ErrorCode::AccessDenied: return "ACCESS_DENIED";
    case ErrorCode::BadCredentials: return "BAD_CREDENTIALS";
    case ErrorCode::AuthRequired: return "AUTH_REQUIRED";
    case ErrorCode::StorageFailure: return "STORAGE_FAILURE";
    case ErrorCode::DigestMismatch: return "DIGEST_MISMATCH";
    case ErrorCode::DigestUnparseable: return "DIGEST_UNPARSEABLE";
    case ErrorCode::SourceCorrupt: return "SOURCE_CORRUPT";
    case ErrorCode::RangeOutOfBounds: return "RANGE_OUT_OF_BOUNDS";
    case ErrorCode::EmptyBody: return "EMPTY_BODY";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::ParamInvalid: return "PARAM_INVALID";
    case ErrorCode::PlanInvalid: return "PLAN_INVALID";
    case ErrorCode::ManifestInvalid: return "MANIFEST_INVALID";
    case ErrorCode::ToolFailed: return "TOOL_FAILED";
    case ErrorCode::Timeout: return "TIMEOUT";
    case ErrorCode::LatexEngineMissing: return "LATEX_ENGINE_MISSING";
    case ErrorCode::LatexCompileFailed: return "LATEX_COMPILE_FAILED";
    case ErrorCode::ReferentialFailure: return "REFERENTIAL_FAILURE";
    case ErrorCode::IncompatibleVersion: return "INCOMPATIBLE_VERSION";
    case ErrorCode::Locked: return "LOCKED";
    case ErrorCode::BindFailure: return "BIND_FAILURE";
    case ErrorCode::CaseClosed: return "CASE_CLOSED";
    case ErrorCode::BootstrapRequired: return "BOOTSTRAP_REQUIRED";
    case ErrorCode::Duplicate: return "DUPLICATE";
    case ErrorCode::DeletionRefused: return "DELETION_REFUSED";
    case ErrorCode::IntegrityFailure: return "INTEGRITY_FAILURE";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "INTERNAL";
}

}  // namespace custodian
