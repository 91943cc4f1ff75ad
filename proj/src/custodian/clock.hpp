#pragma once

#include <atomic>
#include <chrono>

#include "custodian/types.hpp"

namespace custodian {

class Clock {
 public:
  virtual ~Clock() = default;
  [[nodiscard]] virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  [[nodiscard]] Timestamp now() const override {
    using namespace std::chrono;
    return Timestamp{duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
  }
};

// Test clock; can be moved backwards to exercise monotonic clamping.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms) : ms_(start_ms) {}
  [[nodiscard]] Timestamp now() const override { return Timestamp{ms_.load()}; }
  void set(std::int64_t ms) { ms_.store(ms); }
  void advance(std::int64_t delta_ms) { ms_.fetch_add(delta_ms); }

 private:
  std::atomic<std::int64_t> ms_;
};

}  // namespace custodian
