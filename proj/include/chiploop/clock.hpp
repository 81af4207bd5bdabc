#pragma once

#include <chrono>
#include <cstdint>

namespace chiploop {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class WallClock : public Clock {
 public:
  std::int64_t now_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
};

// Deterministic clock for reproducible logs: starts at zero and advances by a
// fixed step on every reading.
class SteppingClock : public Clock {
 public:
  explicit SteppingClock(std::int64_t step_ms = 1000) : step_ms_(step_ms) {}
  std::int64_t now_ms() override {
    const auto t = t_;
    t_ += step_ms_;
    return t;
  }

 private:
  std::int64_t step_ms_;
  std::int64_t t_ = 0;
};

}  // namespace chiploop
