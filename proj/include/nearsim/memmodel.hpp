#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nearsim/simkernel.hpp"

namespace nearsim {

enum class MemOp : std::uint8_t { Read, Write };

constexpr std::uint32_t kMaxPacketBytes = 128;

struct MemRequest {
    MemOp op = MemOp::Read;
    std::uint64_t address = 0;
    std::uint32_t size = 0;
    std::uint32_t originator = 0;  // stats tag, assigned by the issuing unit
    SimTime issued_at = 0;         // stamped when the request leaves the port
};

using Completion = std::function<void(const MemRequest&, SimTime)>;

struct TagStats {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t bytes_read = 0;
    std::uint64_t bytes_written = 0;
    std::uint64_t bank_conflicts = 0;
};

struct MemStats {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t bytes_read = 0;
    std::uint64_t bytes_written = 0;
    std::uint64_t bank_conflicts = 0;
    std::uint32_t max_queue_occupancy = 0;
    std::vector<SimTime> vault_busy;           // empty for the fixed model
    std::map<std::uint32_t, TagStats> by_tag;  // keyed by MemRequest::originator
};

enum class PortSource : std::uint8_t { Cpu, Accel };

// One line of the ASCII interchange trace (see harness): time is kept in ps
// here and rendered in ns on disk.
struct TraceRecord {
    SimTime at = 0;
    PortSource source = PortSource::Cpu;
    MemOp op = MemOp::Read;
    std::uint64_t address = 0;
    std::uint32_t size = 0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

class MemoryModel;

// Issue point into a memory backend. At most max_outstanding requests are in
// flight per port; extra submissions wait in the port queue (stall, never
// error). Units that prefer to self-throttle poll free_slots() and register
// a drain callback.
class MemPort {
public:
    void submit(MemRequest req, Completion done);

    std::uint32_t outstanding() const { return outstanding_; }
    std::uint32_t max_outstanding() const { return max_outstanding_; }
    std::uint32_t free_slots() const { return max_outstanding_ - outstanding_; }
    std::uint32_t peak_outstanding() const { return peak_outstanding_; }
    bool queue_empty() const { return stalled_.empty(); }
    const std::string& name() const { return name_; }
    PortSource source() const { return source_; }

    // Called when a slot frees and the port's own stall queue has drained.
    void set_drain_callback(std::function<void()> cb) { drain_cb_ = std::move(cb); }

private:
    friend class MemoryModel;
    MemPort(MemoryModel& model, std::string name, std::uint32_t max_outstanding,
            PortSource source)
        : model_(model), name_(std::move(name)), max_outstanding_(max_outstanding),
          source_(source) {}

    void launch(MemRequest req, Completion done);
    void complete(const MemRequest& req, SimTime at, Completion& done);

    MemoryModel& model_;
    std::string name_;
    std::uint32_t max_outstanding_;
    PortSource source_;
    std::uint32_t outstanding_ = 0;
    std::uint32_t peak_outstanding_ = 0;
    std::deque<std::pair<MemRequest, Completion>> stalled_;
    std::function<void()> drain_cb_;
};

// Common port/statistics machinery; timing lives in the backends.
class MemoryModel {
public:
    MemoryModel(Kernel& kernel, std::uint64_t memory_size);
    virtual ~MemoryModel() = default;

    // max_outstanding = 0 picks the backend's configured default.
    MemPort& make_port(const std::string& name, std::uint32_t max_outstanding,
                       PortSource source);

    MemStats stats_snapshot() const { return stats_; }
    void set_trace_sink(TraceSink sink) { trace_sink_ = std::move(sink); }

    Kernel& kernel() { return kernel_; }
    std::uint64_t memory_size() const { return memory_size_; }

    virtual std::string name() const = 0;
    virtual std::uint32_t default_max_outstanding() const = 0;

protected:
    friend class MemPort;
    struct Launched {
        MemRequest req;
        Completion done;
        MemPort* port = nullptr;
    };

    virtual void service(Launched&& l) = 0;

    // Backend calls this at the request's completion time.
    void finish_now(Launched& l);

    Kernel& kernel_;
    ComponentId comp_;
    std::uint64_t memory_size_;
    MemStats stats_;
    TraceSink trace_sink_;
    std::vector<std::unique_ptr<MemPort>> ports_;
};

// Fixed-latency memory behind a single rate-limited link, the kind of
// behavior a programmable delay unit enforces. Reads and writes charge
// serialization plus their configured latency.
struct FixedMemConfig {
    SimTime read_latency = 85 * kPsPerNs;
    SimTime write_latency = 106 * kPsPerNs;
    std::uint64_t link_bytes_per_sec = 10ull * 1000 * 1000 * 1000;
    std::uint32_t max_outstanding = 16;
    std::uint64_t memory_size = 1ull << 30;
};

class FixedMemoryModel final : public MemoryModel {
public:
    FixedMemoryModel(Kernel& kernel, const FixedMemConfig& cfg);

    std::string name() const override { return "fixed"; }
    std::uint32_t default_max_outstanding() const override { return cfg_.max_outstanding; }
    const RateLimitedLink& link() const { return link_; }

private:
    void service(Launched&& l) override;

    FixedMemConfig cfg_;
    RateLimitedLink link_;
};

// HMC-like model: packets stripe round-robin over the external links, route
// to a vault by address interleave, queue FIFO per vault, and hold the target
// bank for a closed-page restore window after each access. Whole packets
// move at once and an access completes in a fixed latency regardless of size.
struct HmcConfig {
    std::uint32_t n_links = 4;
    std::uint64_t link_bytes_per_sec = 20ull * 1000 * 1000 * 1000;
    std::uint32_t n_quads = 4;
    std::uint32_t n_vaults = 32;
    std::uint32_t banks_per_vault = 16;
    SimTime access_latency = 78600;  // ps; isolated 128 B read = 6.4 ns link + this
    SimTime bank_busy = 50 * kPsPerNs;
    std::uint32_t vault_queue_depth = 32;
    std::uint32_t interleave_bytes = 128;
    SimTime vault_cycle = 800;  // one new service start per vault per cycle
    std::uint32_t max_outstanding = 16;
    std::uint64_t memory_size = 1ull << 30;

    void validate() const;
};

struct HmcRoute {
    std::uint32_t quad = 0;
    std::uint32_t vault = 0;
    std::uint32_t bank = 0;
};

// Pure address mapping: vault from the interleave granule, bank from the
// next level up, quad as a contiguous group of vaults.
HmcRoute hmc_route(std::uint64_t address, const HmcConfig& cfg);

class HmcMemoryModel final : public MemoryModel {
public:
    HmcMemoryModel(Kernel& kernel, const HmcConfig& cfg);

    std::string name() const override { return "hmc"; }
    std::uint32_t default_max_outstanding() const override { return cfg_.max_outstanding; }
    const HmcConfig& config() const { return cfg_; }

private:
    struct Queued {
        Launched l;
        HmcRoute route;
        SimTime ready = 0;  // arrival (or admission) time at the vault
    };

    struct Vault {
        std::deque<Queued> queue;   // admitted, bounded by vault_queue_depth
        std::deque<Queued> parked;  // overflow waiting for a queue slot
        std::vector<SimTime> bank_free;
        SimTime next_issue = 0;
        SimTime busy_until = 0;
        bool start_pending = false;
    };

    void service(Launched&& l) override;
    void vault_arrive(std::uint32_t v, Queued&& q);
    void pump(std::uint32_t v);
    void start_head(std::uint32_t v);
    void note_occupancy(const Vault& vault);

    HmcConfig cfg_;
    std::vector<RateLimitedLink> links_;
    std::vector<Vault> vaults_;
    std::uint64_t link_rr_ = 0;
};

}  // namespace nearsim
