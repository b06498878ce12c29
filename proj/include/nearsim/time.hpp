#pragma once

#include <cmath>
#include <cstdint>

namespace nearsim {

// Simulated time in integer picoseconds. 1 ps exactly represents both the
// emulated memory delay quantum (0.25 ns) and the 1.25 GHz pipeline period
// (800 ps). A uint64_t covers ~213 days of simulated time.
using SimTime = std::uint64_t;

constexpr SimTime kPsPerNs = 1000;
constexpr SimTime kPsPerUs = 1000 * 1000;
constexpr SimTime kPsPerSec = 1000ull * 1000 * 1000 * 1000;

constexpr SimTime ps_from_ns(double ns) {
    return static_cast<SimTime>(ns * 1000.0 + 0.5);
}

constexpr double ns_from_ps(SimTime t) { return static_cast<double>(t) / 1000.0; }

// A periodic clock anchored at `phase`. Cycle arithmetic is exact integer
// math; frequencies are stored as rounded-ps periods (2.57 GHz -> 389 ps,
// a 0.03% error that is accepted and documented in the README).
struct Clock {
    SimTime period = 1;
    SimTime phase = 0;

    static Clock from_ghz(double ghz, SimTime phase = 0) {
        auto p = static_cast<SimTime>(std::llround(1000.0 / ghz));
        return Clock{p < 1 ? 1 : p, phase};
    }

    SimTime cycle_to_time(std::uint64_t cycle) const { return phase + cycle * period; }

    // First clock edge at or after t.
    SimTime next_edge(SimTime t) const {
        if (t <= phase) return phase;
        const SimTime span = t - phase;
        const SimTime cycles = (span + period - 1) / period;
        return phase + cycles * period;
    }

    SimTime cycles(std::uint64_t n) const { return n * period; }
};

}  // namespace nearsim
