#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace custodian {

struct ProcessResult {
  int exit_status = 0;  // 128+signal when killed by a signal
  bool timed_out = false;
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> err;
};

// Runs argv directly (no shell). stdin is /dev/null; stdout and stderr are
// captured as raw bytes. On timeout the whole process group is killed.
// An argv[0] that cannot be executed yields exit status 127.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          std::chrono::milliseconds timeout);

// Looks an executable up on PATH (or accepts an explicit path).
std::optional<std::filesystem::path> find_executable(const std::string& name);

}  // namespace custodian
