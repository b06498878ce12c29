#include "nearsim/host.hpp"

#include <algorithm>
#include <cassert>

namespace nearsim {

void CpuConfig::validate() const {
    if (clock.period < 1) throw ConfigError("cpu.clock: period must be >= 1 ps");
    if (line_bytes == 0) throw ConfigError("cpu.line_bytes must be > 0");
}

SimTime DispatchResult::sum_lookup() const {
    SimTime s = 0;
    for (const BatchTiming& b : batches) s += b.t_lookup();
    return s;
}

SimTime DispatchResult::sum_full() const {
    SimTime s = 0;
    for (const BatchTiming& b : batches) s += b.t_full_lookup();
    return s;
}

BatchDispatcher::BatchDispatcher(Kernel& kernel, const CpuConfig& cpu,
                                 std::vector<LookupAccelerator*> accels,
                                 const std::vector<QueryBatch>& batches,
                                 std::vector<std::uint64_t> key_bases)
    : kernel_(kernel),
      comp_(kernel.register_component("cpu")),
      cpu_(cpu),
      accels_(std::move(accels)),
      batches_(batches),
      key_bases_(std::move(key_bases)) {
    cpu_.validate();
    if (accels_.empty()) throw ConfigError("dispatch: need at least one accelerator");
    if (key_bases_.size() != accels_.size()) {
        throw ConfigError("dispatch: one key staging region per accelerator");
    }
    result_.plan.total_batches = static_cast<std::uint32_t>(batches_.size());
    result_.plan.assignments.resize(accels_.size());
    result_.batches.resize(batches_.size());
}

void BatchDispatcher::start() {
    result_.start = kernel_.now();
    for (std::uint32_t b = 0; b < batches_.size(); ++b) pending_.push_back(b);
    cpus_active_ = static_cast<std::uint32_t>(accels_.size());
    for (std::uint32_t c = 0; c < accels_.size(); ++c) {
        kernel_.schedule(kernel_.now(), comp_, [this, c]() { cpu_next(c); }, "cpu.start");
    }
}

void BatchDispatcher::cpu_next(std::uint32_t cpu) {
    if (pending_.empty()) {
        assert(cpus_active_ > 0);
        if (--cpus_active_ == 0) result_.finished = true;
        return;
    }
    const std::uint32_t batch_id = pending_.front();
    pending_.pop_front();
    result_.plan.assignments[cpu].push_back(batch_id);
    run_batch_on(cpu, batch_id);
}

void BatchDispatcher::run_batch_on(std::uint32_t cpu, std::uint32_t batch_id) {
    const QueryBatch& batch = batches_[batch_id];
    LookupAccelerator& accel = *accels_[cpu];
    const AccelConfig& acfg = accel.config();

    BatchTiming& timing = result_.batches[batch_id];
    timing.batch_id = batch_id;
    timing.accel = cpu;
    timing.flush_start = kernel_.now();

    const auto n = static_cast<std::uint64_t>(batch.size());
    const std::uint64_t key_bytes = n * acfg.key_bytes;
    const std::uint64_t value_bytes = n * acfg.value_bytes;
    const std::uint64_t flush_lines = (key_bytes + cpu_.line_bytes - 1) / cpu_.line_bytes;
    const std::uint64_t value_lines = (value_bytes + cpu_.line_bytes - 1) / cpu_.line_bytes;

    // Flush the staged keys, then configure and signal the engine.
    const SimTime signal_at = kernel_.now() +
                              cpu_.clock.cycles(flush_lines * cpu_.flush_cycles_per_line) +
                              cpu_.clock.cycles(cpu_.config_write_cycles);

    kernel_.schedule(
        signal_at, comp_,
        [this, cpu, batch_id, &batch, &accel, value_lines]() {
            accel.start_batch(
                batch, key_bases_[cpu],
                [this, cpu, batch_id, value_lines, &accel](const AccelBatchResult& r) {
                    BatchTiming& t = result_.batches[batch_id];
                    // Invalidate the value region: "lookup" ends here.
                    const SimTime lookup_end =
                        kernel_.now() + cpu_.clock.cycles(value_lines *
                                                          cpu_.invalidate_cycles_per_line);
                    // Read values back from the scratchpad, one line at a time.
                    const SimTime full_end =
                        lookup_end + value_lines * accel.config().scratchpad_latency;
                    t.lookup_end = lookup_end;
                    t.full_end = full_end;
                    result_.total_queries += r.values.size();
                    result_.total_mismatches += r.mismatches;
                    result_.last_lookup_end = std::max(result_.last_lookup_end, lookup_end);
                    result_.last_full_end = std::max(result_.last_full_end, full_end);
                    kernel_.schedule(
                        full_end, comp_, [this, cpu]() { cpu_next(cpu); }, "cpu.readback");
                });
        },
        "cpu.signal");
}

}  // namespace nearsim
