#include "nearsim/accel.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>

namespace nearsim {

namespace {
constexpr SimTime kNotArrived = ~0ull;
}

AccelConfig AccelConfig::normalized() const {
    AccelConfig c = *this;
    if (c.opt_double_bus) c.bus_width_bytes = 16;
    if (c.opt_double_outstanding) c.max_outstanding = 32;
    return c;
}

void AccelConfig::validate() const {
    if (clock.period < 1) throw ConfigError("accel.clock: period must be >= 1 ps");
    if (bus_width_bytes == 0) throw ConfigError("accel.bus_width_bytes must be > 0");
    if (opt_double_bus && bus_width_bytes != 16) {
        throw ConfigError("accel.opt_double_bus requires bus_width_bytes = 16");
    }
    if (opt_double_outstanding && max_outstanding != 32) {
        throw ConfigError("accel.opt_double_outstanding requires max_outstanding = 32");
    }
    if (max_outstanding == 0) throw ConfigError("accel.max_outstanding must be >= 1");
    if (key_bytes == 0 || key_bytes > kMaxPacketBytes) {
        throw ConfigError("accel.key_bytes out of range");
    }
    const std::uint32_t keys_per_packet =
        opt_batch_keys ? kMaxPacketBytes / key_bytes : 1;
    if (fifo_depth < keys_per_packet) {
        throw ConfigError("accel.fifo_depth smaller than one key packet");
    }
}

std::uint32_t effective_entry_cycles(const AccelConfig& cfg) {
    const std::uint32_t c = (kEntryBytes + cfg.bus_width_bytes - 1) / cfg.bus_width_bytes;
    return std::max<std::uint32_t>(c, 1);  // cannot consume less than one cycle
}

std::vector<MemRequest> plan_key_reads(std::uint32_t batch_size, std::uint64_t key_base,
                                       const AccelConfig& cfg, std::uint32_t originator) {
    std::vector<MemRequest> plan;
    if (batch_size == 0) return plan;
    if (!cfg.opt_batch_keys) {
        plan.reserve(batch_size);
        for (std::uint32_t i = 0; i < batch_size; ++i) {
            plan.push_back(MemRequest{MemOp::Read, key_base + std::uint64_t(i) * cfg.key_bytes,
                                      cfg.key_bytes, originator});
        }
        return plan;
    }
    const std::uint64_t total = std::uint64_t(batch_size) * cfg.key_bytes;
    std::uint64_t off = 0;
    while (off < total) {
        const auto size = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(kMaxPacketBytes, total - off));
        plan.push_back(MemRequest{MemOp::Read, key_base + off, size, originator});
        off += size;
    }
    return plan;
}

std::vector<MemRequest> plan_probe_reads(std::uint64_t index, std::uint32_t scan_len,
                                         const HashTable& table, std::uint32_t originator) {
    std::vector<MemRequest> plan;
    const std::uint64_t cap = table.capacity();
    assert(index < cap);
    // A wraparound splits the burst into at most two contiguous segments.
    std::uint64_t remaining = scan_len;
    std::uint64_t at = index;
    while (remaining > 0) {
        const std::uint64_t run = std::min<std::uint64_t>(remaining, cap - at);
        std::uint64_t bytes = run * kEntryBytes;
        std::uint64_t addr = table.entry_address(at);
        while (bytes > 0) {
            const auto size =
                static_cast<std::uint32_t>(std::min<std::uint64_t>(kMaxPacketBytes, bytes));
            plan.push_back(MemRequest{MemOp::Read, addr, size, originator});
            addr += size;
            bytes -= size;
        }
        remaining -= run;
        at = (at + run) % cap;
    }
    return plan;
}

std::uint32_t csu_compare(const TableEntry* entries, std::size_t n, std::uint64_t target) {
    for (std::size_t i = 0; i < n; ++i) {
        if (entries[i].occupied() && entries[i].key == target) return entries[i].value;
    }
    return kNotFoundValue;
}

// ------------------------------------------------------ LookupAccelerator

LookupAccelerator::LookupAccelerator(Kernel& kernel, const std::string& name,
                                     const AccelConfig& cfg, MemoryModel& mem,
                                     const HashTable& table)
    : kernel_(kernel),
      comp_(kernel.register_component(name)),
      cfg_(cfg.normalized()),
      mem_(mem),
      table_(table) {
    cfg_.validate();
    entry_cycles_ = effective_entry_cycles(cfg_);
    scan_len_ = cfg_.scan_len ? cfg_.scan_len : table.max_probe_len();

    // Tags only label statistics; experiment points construct accelerators
    // from worker threads, so the counter must be atomic.
    static std::atomic<std::uint32_t> next_tag{0};
    tag_keys_ = next_tag.fetch_add(2);
    tag_probes_ = tag_keys_ + 1;

    port_lsu0_ = &mem.make_port(name + ".lsu", cfg_.max_outstanding, PortSource::Accel);
    port_lsu1_ = cfg_.separate_ports
                     ? &mem.make_port(name + ".lsu1", cfg_.max_outstanding, PortSource::Accel)
                     : port_lsu0_;
    auto kick = [this]() { kick_issue(); };
    port_lsu0_->set_drain_callback(kick);
    if (cfg_.separate_ports) port_lsu1_->set_drain_callback(kick);
}

std::uint32_t LookupAccelerator::peak_outstanding() const {
    return std::max(port_lsu0_->peak_outstanding(), port_lsu1_->peak_outstanding());
}

void LookupAccelerator::reset_batch_state() {
    lsu0_q_.clear();
    lsu1_q_.clear();
    issue_pending_ = false;
    issue_lsu1_next_ = false;
    key_packet_done_.clear();
    key_packet_first_.clear();
    key_packet_count_.clear();
    next_key_packet_ = 0;
    next_key_ = 0;
    last_delivery_ = 0;
    queries_.clear();
    csu_query_ = 0;
    csu_packet_ = 0;
    csu_free_ = 0;
    wbus_free_ = 0;
    fifo_count_ = 0;
    fifo_reserved_ = 0;
    results_emitted_ = 0;
    result_ = AccelBatchResult{};
}

void LookupAccelerator::start_batch(const QueryBatch& batch, std::uint64_t key_base,
                                    DoneFn done) {
    if (active_) throw SimError("accelerator already running a batch");
    active_ = true;
    batch_ = &batch;
    key_base_ = key_base;
    done_ = std::move(done);
    reset_batch_state();

    n_queries_ = static_cast<std::uint32_t>(batch.size());
    result_.started = kernel_.now();
    result_.values.assign(n_queries_, kNotFoundValue);
    if (log_queries_) result_.query_log.assign(n_queries_, QueryTiming{});
    queries_.resize(n_queries_);

    next_issue_at_ = kernel_.now() + cfg_.clock.cycles(cfg_.lsu_issue_delay);

    if (n_queries_ == 0) {
        kernel_.schedule(kernel_.now(), comp_, [this]() { finish_batch(); }, "accel.done");
        return;
    }

    if (batch.index_replay()) {
        // Trace replay drives LSU1-R directly: one recorded probe per query,
        // no key fetch or hash stage.
        for (std::uint32_t q = 0; q < n_queries_; ++q) {
            const ReplayProbe& rp = batch.replay_probes[q];
            QueryState& qs = queries_[q];
            qs.index = rp.index;
            qs.planned = true;
            qs.plan_time = kernel_.now();
            auto plan = plan_probe_reads(rp.index, rp.entries, table_, tag_probes_);
            qs.n_packets = static_cast<std::uint32_t>(plan.size());
            qs.entries_total = rp.entries;
            qs.packet_done.assign(plan.size(), kNotArrived);
            for (std::uint32_t p = 0; p < plan.size(); ++p) {
                const std::uint32_t entries = plan[p].size / kEntryBytes;
                qs.packet_entries.push_back(entries);
                lsu1_q_.push_back(ProbeWork{plan[p], q, p, entries});
            }
        }
        kick_issue();
        pump_csu();  // zero-entry replay probes finish without traffic
        return;
    }

    auto plan = plan_key_reads(n_queries_, key_base_, cfg_, tag_keys_);
    std::uint32_t first = 0;
    for (const MemRequest& req : plan) {
        const std::uint32_t n_keys = req.size / cfg_.key_bytes;
        lsu0_q_.push_back(KeyWork{req, first, n_keys});
        first += n_keys;
    }
    key_packet_done_.assign(plan.size(), kNotArrived);
    kick_issue();
}

void LookupAccelerator::kick_issue() {
    if (!active_ || issue_pending_) return;
    if (lsu0_q_.empty() && lsu1_q_.empty()) return;
    issue_pending_ = true;
    const SimTime at = std::max(kernel_.now(), next_issue_at_);
    kernel_.schedule(at, comp_, [this]() { do_issue(); }, "accel.issue");
}

void LookupAccelerator::do_issue() {
    issue_pending_ = false;
    if (!active_) return;

    // Round-robin between the two LSU streams; LSU0 is additionally gated by
    // FIFO space for the keys its packet would deliver.
    const bool lsu0_ready = !lsu0_q_.empty() &&
                            fifo_reserved_ + lsu0_q_.front().n_keys <= cfg_.fifo_depth &&
                            port_lsu0_->free_slots() > 0;
    const bool lsu1_ready = !lsu1_q_.empty() && port_lsu1_->free_slots() > 0;
    if (!lsu0_ready && !lsu1_ready) return;  // re-kicked on drain or new work

    bool pick_lsu1;
    if (lsu0_ready && lsu1_ready) {
        pick_lsu1 = issue_lsu1_next_;
        issue_lsu1_next_ = !issue_lsu1_next_;
    } else {
        pick_lsu1 = lsu1_ready;
    }

    if (pick_lsu1) {
        ProbeWork w = std::move(lsu1_q_.front());
        lsu1_q_.pop_front();
        port_lsu1_->submit(w.req, [this, w](const MemRequest&, SimTime t) {
            on_probe_packet(w, t);
        });
    } else {
        KeyWork w = std::move(lsu0_q_.front());
        lsu0_q_.pop_front();
        fifo_reserved_ += w.n_keys;
        const auto packet = static_cast<std::uint32_t>(key_packet_first_.size());
        key_packet_first_.push_back(w.first_key);
        key_packet_count_.push_back(w.n_keys);
        port_lsu0_->submit(w.req, [this, packet](const MemRequest&, SimTime t) {
            deliver_ready_keys(packet, t);
        });
    }
    next_issue_at_ = kernel_.now() + cfg_.clock.cycles(cfg_.lsu_issue_delay);
    kick_issue();
}

// LSU0 reassembles packets in request order; the splitter then forwards one
// key per cycle to the FIFO and the hash unit.
void LookupAccelerator::deliver_ready_keys(std::uint32_t packet, SimTime done_at) {
    key_packet_done_[packet] = done_at;
    while (next_key_packet_ < key_packet_done_.size() &&
           key_packet_done_[next_key_packet_] != kNotArrived) {
        const SimTime pkt_done = key_packet_done_[next_key_packet_];
        const std::uint32_t first = key_packet_first_[next_key_packet_];
        const std::uint32_t count = key_packet_count_[next_key_packet_];
        for (std::uint32_t k = first; k < first + count; ++k) {
            const SimTime d = next_key_ == 0
                                  ? pkt_done
                                  : std::max(pkt_done, last_delivery_ + cfg_.clock.period);
            last_delivery_ = d;
            ++next_key_;
            ++fifo_count_;
            assert(fifo_count_ <= cfg_.fifo_depth && "FIFO overflow");
            if (log_queries_) result_.query_log[k].key_delivered = d;
            const SimTime hashed = d + cfg_.clock.cycles(cfg_.hash_delay);
            kernel_.schedule(
                hashed, comp_, [this, k]() { hash_output(k, kernel_.now()); },
                "accel.hash_out");
        }
        ++next_key_packet_;
    }
}

void LookupAccelerator::hash_output(std::uint32_t query, SimTime at) {
    QueryState& qs = queries_[query];
    qs.index = table_.slot_of(batch_->keys[query]);
    qs.planned = true;
    qs.plan_time = at;
    if (log_queries_) result_.query_log[query].index_ready = at;

    auto plan = plan_probe_reads(qs.index, scan_len_, table_, tag_probes_);
    qs.n_packets = static_cast<std::uint32_t>(plan.size());
    qs.entries_total = scan_len_;
    qs.packet_done.assign(plan.size(), kNotArrived);
    qs.packet_entries.clear();
    for (std::uint32_t p = 0; p < plan.size(); ++p) {
        const std::uint32_t entries = plan[p].size / kEntryBytes;
        qs.packet_entries.push_back(entries);
        lsu1_q_.push_back(ProbeWork{plan[p], query, p, entries});
    }
    kick_issue();
    pump_csu();  // scan_len 0 (empty table) completes without memory traffic
}

void LookupAccelerator::on_probe_packet(const ProbeWork& w, SimTime done_at) {
    QueryState& qs = queries_[w.query];
    qs.packet_done[w.packet] = done_at;
    result_.entries_fetched += w.entries;
    pump_csu();
}

// The CSU consumes packets strictly in query order (re-associating streams
// by query tag), charging effective_entry_cycles per entry and emitting the
// value csu_delay cycles after the scan completes.
void LookupAccelerator::pump_csu() {
    while (csu_query_ < n_queries_) {
        QueryState& qs = queries_[csu_query_];
        if (!qs.planned) return;  // hash output not produced yet
        if (qs.n_packets == 0) {
            // Zero-length scan: nothing streamed, emit straight away.
            finalize_query(csu_query_, std::max(csu_free_, qs.plan_time));
            continue;
        }
        const SimTime arrived = qs.packet_done[csu_packet_];
        if (arrived == kNotArrived) return;  // waiting on memory
        const SimTime start = std::max(csu_free_, arrived);
        const SimTime end =
            start + cfg_.clock.cycles(std::uint64_t(qs.packet_entries[csu_packet_]) *
                                      entry_cycles_);
        csu_free_ = end;
        ++csu_packet_;
        if (csu_packet_ == qs.n_packets) {
            if (log_queries_) result_.query_log[csu_query_].probes_done = arrived;
            finalize_query(csu_query_, end);
        }
    }
}

void LookupAccelerator::finalize_query(std::uint32_t query, SimTime csu_end) {
    QueryState& qs = queries_[query];

    // Functional compare over the fetched window; the wraparound splits it
    // into at most two contiguous runs through the same CSU logic.
    std::uint32_t value = kNotFoundValue;
    if (!batch_->index_replay()) {
        const std::uint64_t target = batch_->keys[query];
        const std::uint64_t cap = table_.capacity();
        const std::uint64_t first_run = std::min<std::uint64_t>(qs.entries_total, cap - qs.index);
        value = csu_compare(&table_.entry(qs.index), first_run, target);
        if (value == kNotFoundValue && first_run < qs.entries_total) {
            value = csu_compare(&table_.entry(0), qs.entries_total - first_run, target);
        }
    }
    result_.values[query] = value;

    const SimTime result_at = csu_end + cfg_.clock.cycles(cfg_.csu_delay);
    const SimTime write_start = std::max(result_at, wbus_free_);
    wbus_free_ = write_start + cfg_.clock.period;  // one value issue per cycle
    const SimTime written = write_start + cfg_.scratchpad_latency;
    if (log_queries_) {
        result_.query_log[query].result_ready = result_at;
        result_.query_log[query].value_written = written;
    }

    if (!batch_->index_replay()) {
        assert(fifo_count_ > 0);
        --fifo_count_;
        assert(fifo_reserved_ > 0);
        --fifo_reserved_;
    }
    ++results_emitted_;

    ++csu_query_;
    csu_packet_ = 0;

    if (results_emitted_ == n_queries_) {
        result_.finished = written;
        kernel_.schedule(written, comp_, [this]() { finish_batch(); }, "accel.done");
    } else {
        kick_issue();  // FIFO space may have unblocked LSU0
    }
}

void LookupAccelerator::finish_batch() {
    // Validate against the batch annotations when they are authoritative
    // (scan covering the table's max probe length).
    result_.mismatches = 0;
    if (!batch_->index_replay()) {
        for (std::uint32_t q = 0; q < n_queries_; ++q) {
            if (result_.values[q] != batch_->expected[q]) ++result_.mismatches;
        }
    }
    if (result_.finished == 0) result_.finished = kernel_.now();
    active_ = false;
    AccelBatchResult out = std::move(result_);
    result_ = AccelBatchResult{};
    DoneFn done = std::move(done_);
    done_ = nullptr;
    batch_ = nullptr;
    if (done) done(out);
}

}  // namespace nearsim
