#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace voicerelay {

using Duration = std::chrono::milliseconds;
using TimePoint = std::chrono::sys_time<std::chrono::milliseconds>;

inline std::int64_t to_millis(TimePoint t) { return t.time_since_epoch().count(); }
inline TimePoint from_millis(std::int64_t ms) { return TimePoint{Duration{ms}}; }
inline double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

inline Duration seconds(double s) {
    return Duration{static_cast<std::int64_t>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5))};
}

/// Source of "now" for everything that stamps events. Simulations install a
/// VirtualClock; the network server uses the system clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
public:
    TimePoint now() const override {
        return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
    }
};

class VirtualClock final : public Clock {
public:
    explicit VirtualClock(TimePoint start = TimePoint{}) : now_ms_(to_millis(start)) {}

    TimePoint now() const override { return from_millis(now_ms_.load()); }

    void set(TimePoint t) { now_ms_.store(to_millis(t)); }
    void advance(Duration d) { now_ms_.fetch_add(d.count()); }

private:
    std::atomic<std::int64_t> now_ms_;
};

}  // namespace voicerelay
