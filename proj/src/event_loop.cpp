#include "biot/event_loop.hpp"

namespace biot::harness {

void EventLoop::schedule(Seconds at, int priority, Action action) {
    if (at < now_) {
        throw Error(ErrorCode::ClockRegression, "cannot schedule at " + std::to_string(at.count()) +
                                                    " s, clock is at " + std::to_string(now_.count()) + " s");
    }
    queue_.push({at, priority, next_seq_++, std::move(action)});
}

bool EventLoop::step() {
    if (queue_.empty()) return false;
    Entry e = queue_.top();
    queue_.pop();
    now_ = e.at;
    e.action(now_);
    return true;
}

std::uint64_t EventLoop::run(std::uint64_t limit) {
    std::uint64_t n = 0;
    while (n < limit && step()) ++n;
    return n;
}

}  // namespace biot::harness
