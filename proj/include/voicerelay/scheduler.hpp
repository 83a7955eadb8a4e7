#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <unordered_map>
#include <utility>

#include "voicerelay/time.hpp"

namespace voicerelay {

using TimerId = std::uint64_t;

/// Event loop abstraction the relay runs on. Every callback runs on the
/// loop's single logical thread, which serializes all session state.
class Scheduler {
public:
    virtual ~Scheduler() = default;

    virtual TimePoint now() const = 0;

    /// Runs `fn` at (or as soon as possible after) `when`.
    virtual TimerId at(TimePoint when, std::function<void()> fn) = 0;

    virtual void cancel(TimerId id) = 0;

    /// Runs `work` somewhere it may block, then runs the continuation it
    /// returns back on the loop.
    virtual void offload(std::function<std::function<void()>()> work) = 0;

    TimerId after(Duration d, std::function<void()> fn) { return at(now() + d, std::move(fn)); }
    void post(std::function<void()> fn) { at(now(), std::move(fn)); }
};

/// Discrete-event scheduler over a VirtualClock. Events at equal times run in
/// the order they were scheduled, so runs are fully deterministic.
class SimulatedScheduler final : public Scheduler {
public:
    explicit SimulatedScheduler(TimePoint start = TimePoint{}) : clock_(start) {}

    TimePoint now() const override { return clock_.now(); }
    const VirtualClock& clock() const { return clock_; }

    TimerId at(TimePoint when, std::function<void()> fn) override {
        if (when < clock_.now()) when = clock_.now();
        const TimerId id = ++next_id_;
        queue_.emplace(Key{when, id}, std::move(fn));
        when_.emplace(id, when);
        return id;
    }

    void cancel(TimerId id) override {
        auto it = when_.find(id);
        if (it == when_.end()) return;
        queue_.erase(Key{it->second, id});
        when_.erase(it);
    }

    void offload(std::function<std::function<void()>()> work) override {
        auto cont = work();
        if (cont) post(std::move(cont));
    }

    /// Executes the next event; false when the queue is empty.
    bool step() {
        if (queue_.empty()) return false;
        auto node = queue_.extract(queue_.begin());
        clock_.set(node.key().when);
        when_.erase(node.key().id);
        ++executed_;
        node.mapped()();
        return true;
    }

    /// Runs until the queue drains or the next event is past `limit`.
    std::size_t run_until(TimePoint limit) {
        std::size_t n = 0;
        while (!queue_.empty() && queue_.begin()->first.when <= limit) {
            step();
            ++n;
        }
        if (clock_.now() < limit && queue_.empty()) clock_.set(limit);
        return n;
    }

    std::size_t run() {
        std::size_t n = 0;
        while (step()) ++n;
        return n;
    }

    std::size_t pending() const { return queue_.size(); }
    std::size_t executed() const { return executed_; }

private:
    struct Key {
        TimePoint when;
        TimerId id;
        bool operator<(const Key& o) const { return when != o.when ? when < o.when : id < o.id; }
    };

    VirtualClock clock_;
    std::map<Key, std::function<void()>> queue_;
    std::unordered_map<TimerId, TimePoint> when_;
    TimerId next_id_ = 0;
    std::size_t executed_ = 0;
};

}  // namespace voicerelay
