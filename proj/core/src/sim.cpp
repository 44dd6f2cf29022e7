#include "patriot/sim.hpp"

#include <string>

#include "patriot/errors.hpp"

namespace patriot {

SimLoop::Handle SimLoop::schedule(SimTime fire_at, Action action) {
    if (fire_at < now_) {
        throw ClockViolation("schedule: fire_at " + std::to_string(fire_at) +
                             " is before current time " + std::to_string(now_));
    }
    Handle h{fire_at, next_seq_++};
    queue_.emplace(h, std::move(action));
    return h;
}

SimTime SimLoop::run_until(SimTime t) {
    if (t < now_) {
        throw ClockViolation("run_until: target " + std::to_string(t) +
                             " is before current time " + std::to_string(now_));
    }
    while (!queue_.empty() && queue_.begin()->first.first <= t) {
        auto it = queue_.begin();
        now_ = it->first.first;
        Action action = std::move(it->second);
        queue_.erase(it);
        action();
    }
    now_ = t;
    return now_;
}

bool SimLoop::run_one() {
    if (queue_.empty()) return false;
    auto it = queue_.begin();
    now_ = it->first.first;
    Action action = std::move(it->second);
    queue_.erase(it);
    action();
    return true;
}

} // namespace patriot
