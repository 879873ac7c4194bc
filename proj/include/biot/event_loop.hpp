#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "biot/common.hpp"

namespace biot::harness {

/// Single-threaded discrete-event scheduler on the virtual clock. Events run
/// in (time, priority, insertion) order; lower priority values run first.
class EventLoop {
  public:
    using Action = std::function<void(Seconds)>;

    explicit EventLoop(Seconds start = Seconds{0}) : now_(start) {}

    // Errors: ClockRegression if `at` is before the current time.
    void schedule(Seconds at, int priority, Action action);

    // Runs the earliest event; false when the queue is empty.
    bool step();
    // Runs events until the queue is empty or `limit` events have run.
    std::uint64_t run(std::uint64_t limit = UINT64_MAX);

    [[nodiscard]] Seconds now() const noexcept { return now_; }
    [[nodiscard]] bool empty() const noexcept { return queue_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return queue_.size(); }

  private:
    struct Entry {
        Seconds at;
        int priority;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.at != b.at) return a.at > b.at;
            if (a.priority != b.priority) return a.priority > b.priority;
            return a.seq > b.seq;
        }
    };

    Seconds now_;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
};

}  // namespace biot::harness
