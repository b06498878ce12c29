#include "nearsim/simkernel.hpp"

#include <algorithm>
#include <cassert>

namespace nearsim {

Kernel::Kernel() {
    names_.emplace_back("kernel");
}

ComponentId Kernel::register_component(std::string name) {
    names_.push_back(std::move(name));
    return static_cast<ComponentId>(names_.size() - 1);
}

const std::string& Kernel::component_name(ComponentId id) const {
    return names_.at(id);
}

EventId Kernel::schedule(SimTime fire_at, ComponentId target, std::function<void()> fn,
                         const char* label) {
    if (fire_at < now_) {
        throw PastEventError("schedule: fire_at " + std::to_string(fire_at) +
                             " precedes now " + std::to_string(now_));
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(Event{fire_at, seq, target, label, std::move(fn)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    return seq;
}

SimTime Kernel::run_until(SimTime limit) {
    while (!heap_.empty() && heap_.front().fire_at <= limit) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Event ev = std::move(heap_.back());
        heap_.pop_back();

        assert(ev.fire_at >= now_ && "event queue went backwards");
        now_ = ev.fire_at;
        ++delivered_;
        if (log_enabled_) log_.push_back(LogEntry{ev.fire_at, ev.target, ev.label});
        ev.fn();
    }
    if (heap_.empty() && now_ < limit) now_ = limit;
    return now_;
}

SimTime RateLimitedLink::serialization_ps(std::uint64_t size) const {
    // ceil(size * 1e12 / B/s); sizes here are small enough that the product
    // fits in 64 bits (< ~9.2 MB at any bandwidth >= 1 B/s).
    const std::uint64_t num = size * kPsPerSec;
    return (num + bytes_per_sec_ - 1) / bytes_per_sec_;
}

SimTime RateLimitedLink::transfer(std::uint64_t size, SimTime depart) {
    const SimTime start = std::max(depart, next_free_);
    const SimTime ser = serialization_ps(size);
    next_free_ = start + ser;
    busy_time_ += ser;
    total_bytes_ += size;
    return start + ser + latency_;
}

}  // namespace nearsim
