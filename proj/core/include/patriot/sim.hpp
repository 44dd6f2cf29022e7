#ifndef PATRIOT_SIM_HPP
#define PATRIOT_SIM_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <utility>

namespace patriot {

/// Simulated time in milliseconds. Every timestamp in logs and reports
/// derives from this clock, never from wall time.
using SimTime = std::int64_t;

/// Deterministic discrete-event loop. Actions execute in (fire_at, seq)
/// order; seq is a global scheduling counter so ties resolve by
/// scheduling order regardless of container internals.
class SimLoop {
public:
    using Action = std::function<void()>;
    using Handle = std::pair<SimTime, std::uint64_t>;

    SimTime now() const { return now_; }

    /// Enqueue an action. fire_at must not be in the past.
    /// The handle permits cancellation until the action fires.
    Handle schedule(SimTime fire_at, Action action);

    /// Removes a pending action. No-op if it already fired or was cancelled.
    void cancel(const Handle& h) { queue_.erase(h); }

    /// Execute every action with fire_at <= t, then set the clock to t.
    SimTime run_until(SimTime t);

    /// Execute the single earliest pending action, advancing the clock to
    /// its fire time. Returns false when the queue is empty.
    bool run_one();

    bool empty() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

private:
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::map<Handle, Action> queue_;
};

} // namespace patriot

#endif
