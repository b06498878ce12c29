#include "nearsim/memmodel.hpp"

#include <algorithm>
#include <cassert>

namespace nearsim {

// ---------------------------------------------------------------- MemPort

void MemPort::submit(MemRequest req, Completion done) {
    if (req.size < 1) {
        throw MalformedRequestError("memory request with size 0 (" + name_ + ")");
    }
    if (req.size > kMaxPacketBytes) {
        throw MalformedRequestError("memory request of " + std::to_string(req.size) +
                                    " B exceeds the " + std::to_string(kMaxPacketBytes) +
                                    " B packet payload (" + name_ + ")");
    }
    if (req.address + req.size > model_.memory_size()) {
        throw AddressOutOfRangeError("address 0x" + std::to_string(req.address) + " + " +
                                     std::to_string(req.size) + " beyond memory size");
    }
    if (outstanding_ < max_outstanding_) {
        launch(std::move(req), std::move(done));
    } else {
        stalled_.emplace_back(std::move(req), std::move(done));
    }
}

void MemPort::launch(MemRequest req, Completion done) {
    ++outstanding_;
    peak_outstanding_ = std::max(peak_outstanding_, outstanding_);
    assert(outstanding_ <= max_outstanding_);
    req.issued_at = model_.kernel().now();
    if (model_.trace_sink_) {
        model_.trace_sink_(TraceRecord{req.issued_at, source_, req.op, req.address, req.size});
    }
    model_.service(MemoryModel::Launched{std::move(req), std::move(done), this});
}

void MemPort::complete(const MemRequest& req, SimTime at, Completion& done) {
    assert(outstanding_ > 0);
    --outstanding_;
    // Stalled submissions have priority over the freed slot.
    while (!stalled_.empty() && outstanding_ < max_outstanding_) {
        auto [r, d] = std::move(stalled_.front());
        stalled_.pop_front();
        launch(std::move(r), std::move(d));
    }
    if (done) done(req, at);
    if (drain_cb_ && stalled_.empty() && outstanding_ < max_outstanding_) drain_cb_();
}

// ------------------------------------------------------------ MemoryModel

MemoryModel::MemoryModel(Kernel& kernel, std::uint64_t memory_size)
    : kernel_(kernel), comp_(kernel.register_component("mem")), memory_size_(memory_size) {}

MemPort& MemoryModel::make_port(const std::string& name, std::uint32_t max_outstanding,
                                PortSource source) {
    const std::uint32_t slots = max_outstanding ? max_outstanding : default_max_outstanding();
    ports_.emplace_back(new MemPort(*this, name, slots, source));
    return *ports_.back();
}

void MemoryModel::finish_now(Launched& l) {
    const SimTime at = kernel_.now();
    TagStats& tag = stats_.by_tag[l.req.originator];
    if (l.req.op == MemOp::Read) {
        ++stats_.reads;
        stats_.bytes_read += l.req.size;
        ++tag.reads;
        tag.bytes_read += l.req.size;
    } else {
        ++stats_.writes;
        stats_.bytes_written += l.req.size;
        ++tag.writes;
        tag.bytes_written += l.req.size;
    }
    l.port->complete(l.req, at, l.done);
}

// ------------------------------------------------------- FixedMemoryModel

FixedMemoryModel::FixedMemoryModel(Kernel& kernel, const FixedMemConfig& cfg)
    : MemoryModel(kernel, cfg.memory_size), cfg_(cfg), link_(cfg.link_bytes_per_sec, 0) {}

void FixedMemoryModel::service(Launched&& l) {
    const SimTime lat = l.req.op == MemOp::Read ? cfg_.read_latency : cfg_.write_latency;
    const SimTime done_at = link_.transfer(l.req.size, kernel_.now()) + lat;
    kernel_.schedule(
        done_at, comp_,
        [this, l = std::make_shared<Launched>(std::move(l))]() mutable { finish_now(*l); },
        "fixed.complete");
}

// --------------------------------------------------------- HmcMemoryModel

void HmcConfig::validate() const {
    if (n_quads == 0 || n_vaults == 0 || banks_per_vault == 0 || n_links == 0) {
        throw ConfigError("hmc: link/quad/vault/bank counts must be positive");
    }
    if (n_vaults % n_quads != 0) {
        throw ConfigError("hmc.vaults must be divisible by hmc.quads");
    }
    if (interleave_bytes < kMaxPacketBytes ||
        (interleave_bytes & (interleave_bytes - 1)) != 0) {
        throw ConfigError("hmc.interleave_bytes must be a power of two >= 128");
    }
    if (vault_queue_depth == 0) throw ConfigError("hmc.queue_depth must be >= 1");
}

HmcRoute hmc_route(std::uint64_t address, const HmcConfig& cfg) {
    const std::uint64_t granule = address / cfg.interleave_bytes;
    HmcRoute r;
    r.vault = static_cast<std::uint32_t>(granule % cfg.n_vaults);
    r.bank = static_cast<std::uint32_t>((granule / cfg.n_vaults) % cfg.banks_per_vault);
    r.quad = r.vault / (cfg.n_vaults / cfg.n_quads);
    return r;
}

HmcMemoryModel::HmcMemoryModel(Kernel& kernel, const HmcConfig& cfg)
    : MemoryModel(kernel, cfg.memory_size), cfg_(cfg) {
    cfg_.validate();
    links_.reserve(cfg_.n_links);
    for (std::uint32_t i = 0; i < cfg_.n_links; ++i) {
        links_.emplace_back(cfg_.link_bytes_per_sec, 0);
    }
    vaults_.resize(cfg_.n_vaults);
    for (Vault& v : vaults_) v.bank_free.assign(cfg_.banks_per_vault, 0);
    stats_.vault_busy.assign(cfg_.n_vaults, 0);
}

void HmcMemoryModel::service(Launched&& l) {
    // Whole packets stripe across the links round-robin.
    RateLimitedLink& link = links_[link_rr_++ % links_.size()];
    const SimTime arrive = link.transfer(l.req.size, kernel_.now());
    auto q = std::make_shared<Queued>();
    q->l = std::move(l);
    q->route = hmc_route(q->l.req.address, cfg_);
    kernel_.schedule(
        arrive, comp_,
        [this, q]() mutable {
            q->ready = kernel_.now();
            vault_arrive(q->route.vault, std::move(*q));
        },
        "hmc.vault_arrive");
}

void HmcMemoryModel::note_occupancy(const Vault& vault) {
    const auto occ = static_cast<std::uint32_t>(vault.queue.size() + vault.parked.size());
    stats_.max_queue_occupancy = std::max(stats_.max_queue_occupancy, occ);
}

void HmcMemoryModel::vault_arrive(std::uint32_t v, Queued&& q) {
    Vault& vault = vaults_[v];
    if (vault.queue.size() < cfg_.vault_queue_depth) {
        vault.queue.push_back(std::move(q));
    } else {
        vault.parked.push_back(std::move(q));
    }
    note_occupancy(vault);
    pump(v);
}

void HmcMemoryModel::pump(std::uint32_t v) {
    Vault& vault = vaults_[v];
    if (vault.start_pending || vault.queue.empty()) return;
    const Queued& head = vault.queue.front();
    const SimTime base = std::max(head.ready, vault.next_issue);
    const SimTime start = std::max(base, vault.bank_free[head.route.bank]);
    vault.start_pending = true;
    kernel_.schedule(
        start, comp_, [this, v]() { start_head(v); }, "hmc.start");
}

void HmcMemoryModel::start_head(std::uint32_t v) {
    Vault& vault = vaults_[v];
    vault.start_pending = false;
    assert(!vault.queue.empty());
    Queued q = std::move(vault.queue.front());
    vault.queue.pop_front();

    const SimTime start = kernel_.now();
    const std::uint32_t bank = q.route.bank;

    // A conflict is a service start pushed past its queue-ready point by the
    // closed-page restore window of the target bank. next_issue and bank_free
    // are unchanged since pump() computed the start time (starts are
    // serialized per vault), so this re-derives the same quantities.
    const SimTime base = std::max(q.ready, vault.next_issue);
    assert(start == std::max(base, vault.bank_free[bank]));
    if (vault.bank_free[bank] > base) {
        ++stats_.bank_conflicts;
        ++stats_.by_tag[q.l.req.originator].bank_conflicts;
    }

    vault.bank_free[bank] = start + cfg_.bank_busy;
    vault.next_issue = start + cfg_.vault_cycle;

    // Per-vault busy time as a union of access windows.
    const SimTime end = start + cfg_.access_latency;
    if (start >= vault.busy_until) {
        stats_.vault_busy[v] += end - start;
    } else if (end > vault.busy_until) {
        stats_.vault_busy[v] += end - vault.busy_until;
    }
    vault.busy_until = std::max(vault.busy_until, end);

    if (q.l.req.op == MemOp::Write) {
        // Posted: complete at service start, bank still held for bank_busy.
        finish_now(q.l);
    } else {
        kernel_.schedule(
            start + cfg_.access_latency, comp_,
            [this, l = std::make_shared<Launched>(std::move(q.l))]() mutable {
                finish_now(*l);
            },
            "hmc.complete");
    }

    // Admit parked packets now that a queue slot is free.
    while (!vault.parked.empty() && vault.queue.size() < cfg_.vault_queue_depth) {
        Queued p = std::move(vault.parked.front());
        vault.parked.pop_front();
        p.ready = std::max(p.ready, start);
        vault.queue.push_back(std::move(p));
    }
    pump(v);
}

}  // namespace nearsim
