#ifndef MISO_COMMON_CLOCK_H_
#define MISO_COMMON_CLOCK_H_

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>

namespace miso {

using TimePoint = std::chrono::system_clock::time_point;
using Clock = std::function<TimePoint()>;

inline Clock SystemClock() {
  return [] { return std::chrono::system_clock::now(); };
}

// Wall clock plus an adjustable skew, for expiry tests against live services.
class SkewedClock {
 public:
  Clock AsClock() const {
    return [state = state_] {
      return std::chrono::system_clock::now() +
             std::chrono::seconds(state->load());
    };
  }
  void Advance(std::chrono::seconds by) { state_->fetch_add(by.count()); }
  void Reset() { state_->store(0); }

 private:
  std::shared_ptr<std::atomic<int64_t>> state_ =
      std::make_shared<std::atomic<int64_t>>(0);
};

}  // namespace miso

#endif  // MISO_COMMON_CLOCK_H_
