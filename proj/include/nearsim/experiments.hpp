#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "nearsim/config.hpp"
#include "nearsim/results.hpp"
#include "nearsim/trace.hpp"
#include "nearsim/workload.hpp"

namespace nearsim {

enum class ExperimentKind { Verify, Optimize, Scale, Sweep, Replay };

ExperimentKind experiment_kind_from_name(const std::string& name);
std::string experiment_name(ExperimentKind kind);

// Cumulative optimization sets, in the order the optimizations were added:
// none -> batch -> batch+bus -> batch+bus+out.
struct OptSet {
    bool batch_keys = false;
    bool double_bus = false;
    bool double_outstanding = false;

    std::string label() const;
    static OptSet from_label(const std::string& label);
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Verify;
    Config config;
    std::uint64_t seed = 1;
    std::string trace_path;  // replay only

    static ExperimentSpec make(const std::string& name, Config config, std::uint64_t seed);
};

// One point of the experiment cross-product.
struct PointSpec {
    std::string experiment;
    std::string memory_model;  // fixed | hmc
    OptSet opts;
    std::uint32_t n_accel = 1;
    double load_factor = 0.1;
    Distribution distribution = Distribution::Uniform;
    double hit_ratio = 0.9;
    std::uint32_t batch_size = 1024;
    std::uint32_t n_batches = 64;
    std::uint32_t scan_len = 0;  // 0 = table max probe length
    std::uint64_t seed = 1;
};

// Everything a single simulated point produced; the ResultRow is the CSV
// projection, the rest feeds tests and the acceptance suite.
struct PointOutcome {
    ResultRow row;
    MemStats mem_stats;
    std::uint64_t mismatches = 0;
    std::uint32_t table_max_probe_len = 0;
    std::uint64_t tag_key_conflicts = 0;    // bank conflicts on LSU0 key reads
    std::uint64_t tag_probe_conflicts = 0;  // bank conflicts on LSU1 probe reads
};

std::vector<PointSpec> experiment_points(const ExperimentSpec& spec);

// Table contents depend only on (seed, load factor): optimization variants,
// accelerator counts, and backends all see the same table.
std::uint64_t table_seed_for(std::uint64_t seed, double load_factor);

// Runs one point on a fresh kernel. `batch_override` replaces the generated
// workload (trace replay). Tables are cached per (capacity, load, seed)
// between calls when a shared cache is passed in.
class TableCache {
public:
    std::shared_ptr<const HashTable> get(std::uint64_t capacity, double load_factor,
                                         std::uint64_t seed, std::uint64_t base_address);

private:
    struct Entry {
        std::uint64_t capacity;
        double load_factor;
        std::uint64_t seed;
        std::uint64_t base;
        std::shared_ptr<const HashTable> table;
    };
    std::mutex mu_;
    std::vector<Entry> entries_;
};

PointOutcome run_point(const PointSpec& point, const Config& config, TableCache& tables,
                       const QueryBatch* batch_override = nullptr,
                       MemEventSeq* trace_out = nullptr);

// Runs the spec's full cross-product; points execute concurrently when
// experiment.jobs allows, output order is canonical regardless. A caller may
// share a table cache across specs that use the same seed and capacity.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);
std::vector<PointOutcome> run_experiment_outcomes(const ExperimentSpec& spec,
                                                  TableCache* shared_cache = nullptr);

// Simulated-memory layout shared by all experiments: the table sits in one
// contiguous region, per-accelerator key staging buffers sit below it.
constexpr std::uint64_t kTableBaseAddress = 0x10000000;  // 256 MiB
constexpr std::uint64_t kKeyRegionBase = 0x1000;
constexpr std::uint64_t kKeyRegionStride = 0x10000;  // 64 KiB per accelerator

}  // namespace nearsim
