#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nearsim/errors.hpp"
#include "nearsim/time.hpp"

namespace nearsim {

using ComponentId = std::uint32_t;
using EventId = std::uint64_t;

constexpr ComponentId kKernelComponent = 0;

// Single-threaded deterministic event engine. Events at equal timestamps are
// delivered in scheduling order (global sequence counter), which makes runs
// bit-reproducible. One kernel instance per experiment point; instances on
// different threads share nothing.
class Kernel {
public:
    struct LogEntry {
        SimTime at;
        ComponentId component;
        const char* label;
    };

    Kernel();

    // Components exist only as names here; behaviour lives in the closures
    // they schedule. The id tags events for the audit log.
    ComponentId register_component(std::string name);
    const std::string& component_name(ComponentId id) const;

    SimTime now() const { return now_; }

    // Queue `fn` for delivery at fire_at. Throws PastEventError if fire_at
    // precedes now().
    EventId schedule(SimTime fire_at, ComponentId target, std::function<void()> fn,
                     const char* label = "");
    EventId schedule_in(SimTime delay, ComponentId target, std::function<void()> fn,
                        const char* label = "") {
        return schedule(now_ + delay, target, std::move(fn), label);
    }

    // Deliver everything with fire_at <= limit. Returns the timestamp of the
    // last delivered event, or `limit` if the queue drained. now() advances
    // to the returned value.
    SimTime run_until(SimTime limit);

    std::uint64_t events_delivered() const { return delivered_; }
    bool queue_empty() const { return heap_.empty(); }

    // Optional audit trail of delivered events (tests and --debug runs).
    void enable_event_log(bool on) { log_enabled_ = on; }
    const std::vector<LogEntry>& event_log() const { return log_; }

private:
    struct Event {
        SimTime fire_at;
        std::uint64_t seq;
        ComponentId target;
        const char* label;
        std::function<void()> fn;
    };

    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t delivered_ = 0;
    std::vector<Event> heap_;  // min-heap via std::push_heap/pop_heap
    std::vector<std::string> names_;
    bool log_enabled_ = false;
    std::vector<LogEntry> log_;
};

// One-payload-at-a-time serializer: models a fixed-bandwidth link. Transfer
// time is ceil(size/bandwidth) in ps so the link is never under-charged.
class RateLimitedLink {
public:
    RateLimitedLink(std::uint64_t bytes_per_sec, SimTime latency)
        : bytes_per_sec_(bytes_per_sec), latency_(latency) {}

    // Serialize `size` bytes departing no earlier than `depart`; returns the
    // arrival time (serialization + latency). Updates the serializer state.
    SimTime transfer(std::uint64_t size, SimTime depart);

    // Serialization delay alone, no state change.
    SimTime serialization_ps(std::uint64_t size) const;

    SimTime next_free() const { return next_free_; }
    SimTime latency() const { return latency_; }
    std::uint64_t bandwidth() const { return bytes_per_sec_; }
    std::uint64_t total_bytes() const { return total_bytes_; }
    SimTime busy_time() const { return busy_time_; }

private:
    std::uint64_t bytes_per_sec_;
    SimTime latency_;
    SimTime next_free_ = 0;
    std::uint64_t total_bytes_ = 0;
    SimTime busy_time_ = 0;
};

}  // namespace nearsim
