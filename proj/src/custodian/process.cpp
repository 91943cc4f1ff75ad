#include "custodian/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "custodian/error.hpp"

namespace custodian {

namespace fs = std::filesystem;

namespace {

struct Pipe {
  int r = -1, w = -1;
  Pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) fail(ErrorCode::Internal, std::string("pipe: ") + std::strerror(errno));
    r = fds[0];
    w = fds[1];
  }
  ~Pipe() {
    if (r >= 0) ::close(r);
    if (w >= 0) ::close(w);
  }
  void close_read() {
    if (r >= 0) ::close(r);
    r = -1;
  }
  void close_write() {
    if (w >= 0) ::close(w);
    w = -1;
  }
};

bool drain(int fd, std::vector<std::uint8_t>& sink) {
  std::uint8_t buf[65536];
  ssize_t n = ::read(fd, buf, sizeof buf);
  if (n > 0) {
    sink.insert(sink.end(), buf, buf + n);
    return true;
  }
  if (n < 0 && (errno == EINTR || errno == EAGAIN)) return true;
  return false;  // EOF or error
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& cwd,
                          std::chrono::milliseconds timeout) {
  if (argv.empty()) fail(ErrorCode::InvalidArgument, "empty command line");
  Pipe out, err;
  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);
  const std::string cwd_str = cwd.string();

  pid_t pid = ::fork();
  if (pid < 0) fail(ErrorCode::Internal, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out.w, STDOUT_FILENO);
    ::dup2(err.w, STDERR_FILENO);
    if (!cwd_str.empty() && ::chdir(cwd_str.c_str()) != 0) _exit(127);
    ::execvp(cargv[0], cargv.data());
    const char* msg = "exec failed: ";
    (void)!::write(STDERR_FILENO, msg, std::strlen(msg));
    (void)!::write(STDERR_FILENO, cargv[0], std::strlen(cargv[0]));
    (void)!::write(STDERR_FILENO, "\n", 1);
    _exit(127);
  }
  ::setpgid(pid, pid);
  out.close_write();
  err.close_write();

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool out_open = true, err_open = true;
  while (out_open || err_open) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      result.timed_out = true;
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      break;
    }
    pollfd fds[2];
    nfds_t nf = 0;
    int out_idx = -1, err_idx = -1;
    if (out_open) {
      out_idx = static_cast<int>(nf);
      fds[nf++] = {out.r, POLLIN, 0};
    }
    if (err_open) {
      err_idx = static_cast<int>(nf);
      fds[nf++] = {err.r, POLLIN, 0};
    }
    int rc = ::poll(fds, nf, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP | POLLERR))) {
      out_open = drain(out.r, result.out);
    }
    if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP | POLLERR))) {
      err_open = drain(err.r, result.err);
    }
  }
  if (result.timed_out) {
    // collect whatever was already written before the kill
    int flags = ::fcntl(out.r, F_GETFL);
    ::fcntl(out.r, F_SETFL, flags | O_NONBLOCK);
    flags = ::fcntl(err.r, F_GETFL);
    ::fcntl(err.r, F_SETFL, flags | O_NONBLOCK);
    std::uint8_t buf[65536];
    ssize_t n;
    while ((n = ::read(out.r, buf, sizeof buf)) > 0) result.out.insert(result.out.end(), buf, buf + n);
    while ((n = ::read(err.r, buf, sizeof buf)) > 0) result.err.insert(result.err.end(), buf, buf + n);
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    result.exit_status = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_status = 128 + WTERMSIG(status);
  }
  return result;
}

std::optional<fs::path> find_executable(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return fs::path(name);
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  if (path == nullptr) return std::nullopt;
  std::string_view rest(path);
  while (!rest.empty()) {
    auto colon = rest.find(':');
    auto dir = rest.substr(0, colon);
    if (!dir.empty()) {
      fs::path candidate = fs::path(std::string(dir)) / name;
      if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

}  // namespace custodian
