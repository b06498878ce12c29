#include "nearsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "nearsim/accel.hpp"
#include "nearsim/host.hpp"
#include "nearsim/memmodel.hpp"
#include "nearsim/simkernel.hpp"

namespace nearsim {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }

std::uint64_t load_factor_key(double lf) {
    return static_cast<std::uint64_t>(std::llround(lf * 1000.0));
}

Distribution distribution_from_name(const std::string& name) {
    if (name == "uniform") return Distribution::Uniform;
    if (name == "zipf") return Distribution::Zipf;
    throw ConfigError("workload.distribution must be uniform or zipf, got `" + name + "`");
}

std::string distribution_name(Distribution d) {
    return d == Distribution::Uniform ? "uniform" : "zipf";
}

FixedMemConfig fixed_config_from(const Config& cfg) {
    FixedMemConfig m;
    m.read_latency = ps_from_ns(cfg.get_double("memory.read_latency_ns"));
    m.write_latency = ps_from_ns(cfg.get_double("memory.write_latency_ns"));
    m.link_bytes_per_sec =
        static_cast<std::uint64_t>(cfg.get_double("memory.bandwidth_gbps") * 1e9);
    m.max_outstanding = static_cast<std::uint32_t>(cfg.get_u64("memory.max_outstanding"));
    m.memory_size = cfg.get_u64("memory.size_mb") << 20;
    return m;
}

HmcConfig hmc_config_from(const Config& cfg) {
    HmcConfig m;
    m.n_links = static_cast<std::uint32_t>(cfg.get_u64("hmc.links"));
    m.link_bytes_per_sec = static_cast<std::uint64_t>(cfg.get_double("hmc.link_gbps") * 1e9);
    m.n_quads = static_cast<std::uint32_t>(cfg.get_u64("hmc.quads"));
    m.n_vaults = static_cast<std::uint32_t>(cfg.get_u64("hmc.vaults"));
    m.banks_per_vault = static_cast<std::uint32_t>(cfg.get_u64("hmc.banks_per_vault"));
    m.access_latency = ps_from_ns(cfg.get_double("hmc.access_latency_ns"));
    m.bank_busy = ps_from_ns(cfg.get_double("hmc.bank_busy_ns"));
    m.vault_queue_depth = static_cast<std::uint32_t>(cfg.get_u64("hmc.queue_depth"));
    m.interleave_bytes = static_cast<std::uint32_t>(cfg.get_u64("hmc.interleave_bytes"));
    m.vault_cycle = cfg.get_u64("hmc.vault_cycle_ps");
    m.max_outstanding = static_cast<std::uint32_t>(cfg.get_u64("memory.max_outstanding"));
    m.memory_size = cfg.get_u64("memory.size_mb") << 20;
    m.validate();
    return m;
}

AccelConfig accel_config_from(const Config& cfg, const OptSet& opts, std::uint32_t scan_len) {
    AccelConfig a;
    a.clock = Clock::from_ghz(cfg.get_double("accel.clock_ghz"));
    a.bus_width_bytes = static_cast<std::uint32_t>(cfg.get_u64("accel.bus_width_bytes"));
    a.hash_delay = static_cast<std::uint32_t>(cfg.get_u64("accel.hash_delay"));
    a.csu_delay = static_cast<std::uint32_t>(cfg.get_u64("accel.csu_delay"));
    a.lsu_issue_delay = static_cast<std::uint32_t>(cfg.get_u64("accel.lsu_issue_delay"));
    a.fifo_depth = static_cast<std::uint32_t>(cfg.get_u64("accel.fifo_depth"));
    a.scratchpad_latency = ps_from_ns(cfg.get_double("accel.scratchpad_ns"));
    a.max_outstanding = static_cast<std::uint32_t>(cfg.get_u64("accel.max_outstanding"));
    a.scan_len = scan_len;
    a.opt_batch_keys = opts.batch_keys || cfg.get_bool("accel.opt_batch_keys");
    a.opt_double_bus = opts.double_bus || cfg.get_bool("accel.opt_double_bus");
    a.opt_double_outstanding =
        opts.double_outstanding || cfg.get_bool("accel.opt_double_outstanding");
    a.separate_ports = cfg.get_bool("accel.separate_ports");
    return a.normalized();
}

CpuConfig cpu_config_from(const Config& cfg) {
    CpuConfig c;
    c.clock = Clock::from_ghz(cfg.get_double("cpu.clock_ghz"));
    c.flush_cycles_per_line =
        static_cast<std::uint32_t>(cfg.get_u64("cpu.flush_cycles_per_line"));
    c.invalidate_cycles_per_line =
        static_cast<std::uint32_t>(cfg.get_u64("cpu.invalidate_cycles_per_line"));
    c.line_bytes = static_cast<std::uint32_t>(cfg.get_u64("cpu.line_bytes"));
    c.config_write_cycles = static_cast<std::uint32_t>(cfg.get_u64("cpu.config_write_cycles"));
    return c;
}

}  // namespace

std::uint64_t table_seed_for(std::uint64_t seed, double load_factor) {
    return mix_seed(seed, 0x7ab1e000 ^ load_factor_key(load_factor));
}

ExperimentKind experiment_kind_from_name(const std::string& name) {
    if (name == "verify") return ExperimentKind::Verify;
    if (name == "optimize") return ExperimentKind::Optimize;
    if (name == "scale") return ExperimentKind::Scale;
    if (name == "sweep") return ExperimentKind::Sweep;
    if (name == "replay") return ExperimentKind::Replay;
    throw ConfigError("unknown experiment: " + name);
}

std::string experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Verify: return "verify";
        case ExperimentKind::Optimize: return "optimize";
        case ExperimentKind::Scale: return "scale";
        case ExperimentKind::Sweep: return "sweep";
        case ExperimentKind::Replay: return "replay";
    }
    return "?";
}

std::string OptSet::label() const {
    if (double_outstanding) return "batch+bus+out";
    if (double_bus) return "batch+bus";
    if (batch_keys) return "batch";
    return "none";
}

OptSet OptSet::from_label(const std::string& label) {
    if (label == "none") return {};
    if (label == "batch") return {true, false, false};
    if (label == "batch+bus") return {true, true, false};
    if (label == "batch+bus+out") return {true, true, true};
    throw ConfigError("unknown optimization set: " + label +
                      " (expected none|batch|batch+bus|batch+bus+out)");
}

ExperimentSpec ExperimentSpec::make(const std::string& name, Config config,
                                    std::uint64_t seed) {
    ExperimentSpec s;
    s.kind = experiment_kind_from_name(name);
    s.config = std::move(config);
    s.seed = seed;
    return s;
}

std::vector<PointSpec> experiment_points(const ExperimentSpec& spec) {
    const Config& cfg = spec.config;
    const auto loads = cfg.get_double_list("table.load_factors");
    for (const double lf : loads) {
        if (lf <= 0.0 || lf > 0.95) {
            throw ConfigError("table.load_factors: " + std::to_string(lf) +
                              " outside (0, 0.95]");
        }
    }

    PointSpec base;
    base.experiment = experiment_name(spec.kind);
    base.memory_model = cfg.get("memory.model");
    base.distribution = distribution_from_name(cfg.get("workload.distribution"));
    base.hit_ratio = cfg.get_double("workload.hit_ratio");
    base.batch_size = static_cast<std::uint32_t>(cfg.get_u64("workload.batch_size"));
    base.n_batches = static_cast<std::uint32_t>(cfg.get_u64("workload.n_batches"));
    base.seed = spec.seed;

    std::vector<OptSet> opt_sets;
    std::vector<std::uint32_t> accel_counts{1};
    switch (spec.kind) {
        case ExperimentKind::Verify:
            opt_sets.push_back(OptSet{});
            break;
        case ExperimentKind::Optimize:
            base.memory_model = "hmc";
            for (const char* l : {"none", "batch", "batch+bus", "batch+bus+out"}) {
                opt_sets.push_back(OptSet::from_label(l));
            }
            break;
        case ExperimentKind::Scale: {
            base.memory_model = "hmc";
            opt_sets.push_back(OptSet::from_label("batch+bus+out"));
            accel_counts.clear();
            for (const std::uint64_t n : cfg.get_u64_list("experiment.accels")) {
                accel_counts.push_back(static_cast<std::uint32_t>(n));
            }
            break;
        }
        case ExperimentKind::Sweep: {
            std::stringstream ss(cfg.get("experiment.opt_sets"));
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) opt_sets.push_back(OptSet::from_label(item));
            }
            if (opt_sets.empty()) opt_sets.push_back(OptSet{});
            accel_counts.clear();
            for (const std::uint64_t n : cfg.get_u64_list("experiment.accels")) {
                accel_counts.push_back(static_cast<std::uint32_t>(n));
            }
            break;
        }
        case ExperimentKind::Replay:
            opt_sets.push_back(OptSet{});
            break;
    }

    if (base.memory_model != "fixed" && base.memory_model != "hmc") {
        throw ConfigError("memory.model must be fixed or hmc, got `" + base.memory_model +
                          "`");
    }

    const auto explicit_scan = static_cast<std::uint32_t>(cfg.get_u64("accel.scan_len"));

    // Canonical point order: load factor, then opt set, then accel count.
    std::vector<PointSpec> points;
    for (const double lf : loads) {
        for (const OptSet& opts : opt_sets) {
            for (const std::uint32_t n : accel_counts) {
                PointSpec p = base;
                p.load_factor = lf;
                p.opts = opts;
                p.n_accel = n;
                p.scan_len = explicit_scan ? explicit_scan : cfg.scan_len_for(lf);
                points.push_back(p);
                if (spec.kind == ExperimentKind::Replay) return points;  // single point
            }
        }
    }
    return points;
}

std::shared_ptr<const HashTable> TableCache::get(std::uint64_t capacity, double load_factor,
                                                 std::uint64_t seed,
                                                 std::uint64_t base_address) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        for (const Entry& e : entries_) {
            if (e.capacity == capacity && e.load_factor == load_factor && e.seed == seed &&
                e.base == base_address) {
                return e.table;
            }
        }
    }
    auto table = std::make_shared<const HashTable>(
        HashTable::build(capacity, load_factor, seed, base_address));
    std::lock_guard<std::mutex> lock(mu_);
    for (const Entry& e : entries_) {
        if (e.capacity == capacity && e.load_factor == load_factor && e.seed == seed &&
            e.base == base_address) {
            return e.table;  // another thread built it first
        }
    }
    entries_.push_back(Entry{capacity, load_factor, seed, base_address, table});
    return table;
}

PointOutcome run_point(const PointSpec& point, const Config& config, TableCache& tables,
                       const QueryBatch* batch_override, MemEventSeq* trace_out) {
    const std::uint64_t capacity = config.get_u64("table.capacity");
    const std::uint64_t table_seed = table_seed_for(point.seed, point.load_factor);
    const auto table = tables.get(capacity, point.load_factor, table_seed, kTableBaseAddress);

    // Workload is a function of (seed, load factor, workload shape) only, so
    // optimization variants and backends see identical query streams.
    std::vector<QueryBatch> batches;
    if (batch_override) {
        batches.push_back(*batch_override);
    } else {
        WorkloadSpec ws;
        ws.distribution = point.distribution;
        ws.zipf_alpha = config.get_double("workload.zipf_alpha");
        ws.hit_ratio = point.hit_ratio;
        ws.batch_size = point.batch_size;
        ws.n_batches = point.n_batches;
        ws.seed = mix_seed(table_seed, 0x3a7c0 ^ static_cast<std::uint64_t>(point.distribution) ^
                                           (load_factor_key(point.hit_ratio) << 8));
        batches = WorkloadGenerator(ws, *table).all_batches();
    }

    Kernel kernel;
    std::unique_ptr<MemoryModel> mem;
    if (point.memory_model == "fixed") {
        mem = std::make_unique<FixedMemoryModel>(kernel, fixed_config_from(config));
    } else {
        mem = std::make_unique<HmcMemoryModel>(kernel, hmc_config_from(config));
    }

    MemEventSeq trace;
    if (trace_out) {
        mem->set_trace_sink([&trace](const TraceRecord& r) { trace.push_back(r); });
    }

    AccelConfig acfg = accel_config_from(config, point.opts, point.scan_len);
    std::vector<std::unique_ptr<LookupAccelerator>> accels;
    std::vector<LookupAccelerator*> accel_ptrs;
    std::vector<std::uint64_t> key_bases;
    for (std::uint32_t a = 0; a < point.n_accel; ++a) {
        accels.push_back(std::make_unique<LookupAccelerator>(
            kernel, "accel" + std::to_string(a), acfg, *mem, *table));
        accel_ptrs.push_back(accels.back().get());
        key_bases.push_back(kKeyRegionBase + a * kKeyRegionStride);
    }

    BatchDispatcher dispatcher(kernel, cpu_config_from(config), accel_ptrs, batches,
                               key_bases);
    dispatcher.start();
    kernel.run_until(~0ull >> 1);

    const DispatchResult& dr = dispatcher.result();
    if (!dr.finished) throw SimError("simulation drained without finishing all batches");

    PointOutcome out;
    out.mem_stats = mem->stats_snapshot();
    out.mismatches = dr.total_mismatches;
    out.table_max_probe_len = table->max_probe_len();
    for (const auto& a : accels) {
        const auto it_k = out.mem_stats.by_tag.find(a->originator_keys());
        if (it_k != out.mem_stats.by_tag.end()) {
            out.tag_key_conflicts += it_k->second.bank_conflicts;
        }
        const auto it_p = out.mem_stats.by_tag.find(a->originator_probes());
        if (it_p != out.mem_stats.by_tag.end()) {
            out.tag_probe_conflicts += it_p->second.bank_conflicts;
        }
    }

    // With a scan covering the table's max probe length the pipeline must
    // reproduce the software oracle exactly.
    const std::uint32_t effective_scan = accels.front()->scan_len();
    if (effective_scan >= table->max_probe_len() && out.mismatches != 0 &&
        !(batch_override && batch_override->index_replay())) {
        throw SimError("functional mismatch: " + std::to_string(out.mismatches) +
                       " queries disagree with the software oracle");
    }

    ResultRow& row = out.row;
    row.experiment = point.experiment;
    row.memory_model = point.memory_model;
    row.opts = point.opts.label();
    row.n_accel = point.n_accel;
    row.load_factor = point.load_factor;
    row.scan_len = effective_scan;
    row.distribution = distribution_name(point.distribution);
    row.hit_ratio = point.hit_ratio;
    row.batch_size = point.batch_size;
    row.n_batches = static_cast<std::uint32_t>(batches.size());
    // Aggregate lookup time: summed per-batch lookup intervals divided by the
    // accelerator count. Full-lookup time: wall-clock makespan through the
    // last readback. Both definitions coincide for a single accelerator.
    row.t_lookup_ns = ns_from_ps(dr.sum_lookup()) / point.n_accel;
    row.t_full_lookup_ns = ns_from_ps(dr.last_full_end - dr.start);
    const double total_queries = static_cast<double>(dr.total_queries);
    row.mlookups_per_s = row.t_lookup_ns > 0 ? total_queries / row.t_lookup_ns * 1e3 : 0.0;
    row.full_mlookups_per_s =
        row.t_full_lookup_ns > 0 ? total_queries / row.t_full_lookup_ns * 1e3 : 0.0;
    row.bank_conflicts = out.mem_stats.bank_conflicts;
    row.seed = point.seed;

    if (trace_out) *trace_out = std::move(trace);
    return out;
}

std::vector<PointOutcome> run_experiment_outcomes(const ExperimentSpec& spec,
                                                  TableCache* shared_cache) {
    auto points = experiment_points(spec);
    std::vector<PointOutcome> outcomes(points.size());

    // Pre-build shared tables serially so worker threads only read them.
    TableCache local;
    TableCache& tables = shared_cache ? *shared_cache : local;
    const std::uint64_t capacity = spec.config.get_u64("table.capacity");
    for (const PointSpec& p : points) {
        tables.get(capacity, p.load_factor, table_seed_for(p.seed, p.load_factor),
                   kTableBaseAddress);
    }

    std::uint64_t jobs = spec.config.get_u64("experiment.jobs");
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<std::uint64_t>(jobs, points.size());

    if (jobs <= 1 || points.size() <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            outcomes[i] = run_point(points[i], spec.config, tables);
        }
        return outcomes;
    }

    // Points are independent (one kernel each); results land by index so the
    // output order never depends on the execution schedule.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::uint64_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w]() {
            try {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= points.size()) return;
                    outcomes[i] = run_point(points[i], spec.config, tables);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return outcomes;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
    auto outcomes = run_experiment_outcomes(spec);
    std::vector<ResultRow> rows;
    rows.reserve(outcomes.size());
    for (auto& o : outcomes) rows.push_back(std::move(o.row));
    return rows;
}

}  // namespace nearsim
