#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "nearsim/kvstore.hpp"
#include "nearsim/memmodel.hpp"
#include "nearsim/simkernel.hpp"
#include "nearsim/time.hpp"
#include "nearsim/workload.hpp"

namespace nearsim {

// Lookup pipeline configuration. Stage delays are in accelerator cycles; the
// three opt_* switches reproduce the design variants: key reads coalesced
// into 128 B packets, a 16 B datapath (one cycle per table entry instead of
// two), and a doubled outstanding-request budget.
struct AccelConfig {
    Clock clock = Clock::from_ghz(1.25);
    std::uint32_t bus_width_bytes = 8;
    std::uint32_t hash_delay = 4;
    std::uint32_t csu_delay = 2;      // output latency after the last entry of a scan
    std::uint32_t lsu_issue_delay = 1;
    std::uint32_t fifo_depth = 1024;
    SimTime scratchpad_latency = 4 * kPsPerNs;
    std::uint32_t max_outstanding = 16;
    std::uint32_t scan_len = 0;  // 0 = use the table's max probe length
    bool opt_batch_keys = false;
    bool opt_double_bus = false;
    bool opt_double_outstanding = false;
    bool separate_ports = false;
    std::uint32_t key_bytes = 8;
    std::uint32_t value_bytes = 4;

    // Applies the optimization switches to the derived fields.
    AccelConfig normalized() const;
    void validate() const;
};

// Cycles to move one 16 B table entry through the datapath.
std::uint32_t effective_entry_cycles(const AccelConfig& cfg);

// LSU0-R request plan for a batch of keys staged contiguously at key_base.
std::vector<MemRequest> plan_key_reads(std::uint32_t batch_size, std::uint64_t key_base,
                                       const AccelConfig& cfg, std::uint32_t originator);

// LSU1-R burst covering scan_len entries from `index`, split at the table
// wraparound and into <=128 B packets.
std::vector<MemRequest> plan_probe_reads(std::uint64_t index, std::uint32_t scan_len,
                                         const HashTable& table, std::uint32_t originator);

// First occupied entry matching target wins; misses return the sentinel.
std::uint32_t csu_compare(const TableEntry* entries, std::size_t n, std::uint64_t target);

// Per-query stage timestamps, collected when the query log is enabled.
struct QueryTiming {
    SimTime key_delivered = 0;
    SimTime index_ready = 0;
    SimTime probes_done = 0;
    SimTime result_ready = 0;
    SimTime value_written = 0;
};

struct AccelBatchResult {
    std::vector<std::uint32_t> values;
    SimTime started = 0;
    SimTime finished = 0;  // last value written to the scratchpad
    std::uint64_t mismatches = 0;
    std::uint64_t entries_fetched = 0;
    std::vector<QueryTiming> query_log;
};

// The Fig.-1 pipeline: LSU0-R reads keys, the splitter feeds FIFO and hash
// unit, LSU1-R fetches probe bursts, the CSU compares the streamed entries
// against the FIFO head, LSU1-W writes values to the scratchpad. LSU0 and
// LSU1 share one memory port with round-robin issue unless separate_ports.
class LookupAccelerator {
public:
    using DoneFn = std::function<void(const AccelBatchResult&)>;

    LookupAccelerator(Kernel& kernel, const std::string& name, const AccelConfig& cfg,
                      MemoryModel& mem, const HashTable& table);

    // Begin a batch; `done` fires at completion time. One batch at a time.
    void start_batch(const QueryBatch& batch, std::uint64_t key_base, DoneFn done);

    bool busy() const { return active_; }
    const AccelConfig& config() const { return cfg_; }
    std::uint32_t scan_len() const { return scan_len_; }
    void enable_query_log(bool on) { log_queries_ = on; }

    std::uint32_t originator_keys() const { return tag_keys_; }
    std::uint32_t originator_probes() const { return tag_probes_; }
    std::uint32_t peak_outstanding() const;

private:
    struct KeyWork {
        MemRequest req;
        std::uint32_t first_key = 0;
        std::uint32_t n_keys = 0;
    };
    struct ProbeWork {
        MemRequest req;
        std::uint32_t query = 0;
        std::uint32_t packet = 0;
        std::uint32_t entries = 0;
    };
    struct QueryState {
        std::uint64_t index = 0;
        bool planned = false;  // hash output produced (or replay pre-planned)
        SimTime plan_time = 0;
        std::uint32_t n_packets = 0;
        std::uint32_t entries_total = 0;
        std::vector<SimTime> packet_done;  // 0 = not yet arrived
        std::vector<std::uint32_t> packet_entries;
    };

    void reset_batch_state();
    void deliver_ready_keys(std::uint32_t packet, SimTime done_at);
    void hash_output(std::uint32_t query, SimTime at);
    void on_probe_packet(const ProbeWork& w, SimTime done_at);
    void pump_csu();
    void finalize_query(std::uint32_t query, SimTime csu_end);
    void kick_issue();
    void do_issue();
    void finish_batch();

    Kernel& kernel_;
    ComponentId comp_;
    AccelConfig cfg_;
    MemoryModel& mem_;
    const HashTable& table_;
    MemPort* port_lsu0_;
    MemPort* port_lsu1_;
    std::uint32_t tag_keys_;
    std::uint32_t tag_probes_;
    std::uint32_t scan_len_ = 0;
    std::uint32_t entry_cycles_ = 2;
    bool log_queries_ = false;

    // --- per-batch state ---
    bool active_ = false;
    const QueryBatch* batch_ = nullptr;
    std::uint64_t key_base_ = 0;
    DoneFn done_;
    std::uint32_t n_queries_ = 0;
    AccelBatchResult result_;

    std::deque<KeyWork> lsu0_q_;
    std::deque<ProbeWork> lsu1_q_;
    bool issue_pending_ = false;
    bool issue_lsu1_next_ = false;  // round-robin arbiter state
    SimTime next_issue_at_ = 0;

    std::vector<SimTime> key_packet_done_;
    std::vector<std::uint32_t> key_packet_first_;
    std::vector<std::uint32_t> key_packet_count_;
    std::uint32_t next_key_packet_ = 0;   // packets delivered in order so far
    std::uint32_t next_key_ = 0;          // keys pushed into FIFO/hash
    SimTime last_delivery_ = 0;

    std::vector<QueryState> queries_;
    std::uint32_t csu_query_ = 0;   // CSU consumption cursor
    std::uint32_t csu_packet_ = 0;
    SimTime csu_free_ = 0;
    SimTime wbus_free_ = 0;

    std::uint32_t fifo_count_ = 0;     // keys delivered, result not yet emitted
    std::uint32_t fifo_reserved_ = 0;  // keys covered by issued LSU0 reads
    std::uint32_t results_emitted_ = 0;
};

}  // namespace nearsim
