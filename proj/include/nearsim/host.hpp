#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "nearsim/accel.hpp"
#include "nearsim/simkernel.hpp"
#include "nearsim/time.hpp"

namespace nearsim {

// CPU timing model: cache flush/invalidate and scratchpad readback are pure
// time charges; no functional cache state is kept.
struct CpuConfig {
    Clock clock = Clock::from_ghz(2.57);
    std::uint32_t flush_cycles_per_line = 20;
    std::uint32_t invalidate_cycles_per_line = 20;
    std::uint32_t line_bytes = 32;
    std::uint32_t config_write_cycles = 50;

    void validate() const;
};

// Per-batch timing as the paper defines it: "lookup" spans flush through
// value-region invalidate, "full lookup" adds the scratchpad readback.
// Key-write time is excluded by construction (keys are pre-staged).
struct BatchTiming {
    std::uint32_t batch_id = 0;
    std::uint32_t accel = 0;
    SimTime flush_start = 0;
    SimTime lookup_end = 0;
    SimTime full_end = 0;

    SimTime t_lookup() const { return lookup_end - flush_start; }
    SimTime t_full_lookup() const { return full_end - flush_start; }
};

struct DispatchPlan {
    std::uint32_t total_batches = 0;
    std::vector<std::vector<std::uint32_t>> assignments;  // per accel, in pull order
};

struct DispatchResult {
    DispatchPlan plan;
    std::vector<BatchTiming> batches;  // indexed by batch id
    SimTime start = 0;
    SimTime last_lookup_end = 0;
    SimTime last_full_end = 0;
    std::uint64_t total_queries = 0;
    std::uint64_t total_mismatches = 0;
    bool finished = false;

    SimTime sum_lookup() const;
    SimTime sum_full() const;
};

// One CPU per accelerator; CPUs pull the next unassigned batch from the
// shared queue as soon as their current one retires (dynamic load balancing).
class BatchDispatcher {
public:
    BatchDispatcher(Kernel& kernel, const CpuConfig& cpu,
                    std::vector<LookupAccelerator*> accels,
                    const std::vector<QueryBatch>& batches,
                    std::vector<std::uint64_t> key_bases);

    // Schedules the initial CPU activity at kernel.now().
    void start();

    const DispatchResult& result() const { return result_; }

private:
    void cpu_next(std::uint32_t cpu);
    void run_batch_on(std::uint32_t cpu, std::uint32_t batch_id);

    Kernel& kernel_;
    ComponentId comp_;
    CpuConfig cpu_;
    std::vector<LookupAccelerator*> accels_;
    const std::vector<QueryBatch>& batches_;
    std::vector<std::uint64_t> key_bases_;
    std::deque<std::uint32_t> pending_;
    std::uint32_t cpus_active_ = 0;
    DispatchResult result_;
};

}  // namespace nearsim
