#pragma once

namespace custodian {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace custodian
