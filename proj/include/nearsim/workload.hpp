#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nearsim/kvstore.hpp"

namespace nearsim {

enum class Distribution { Uniform, Zipf };

struct WorkloadSpec {
    Distribution distribution = Distribution::Uniform;
    double zipf_alpha = 0.99;
    double hit_ratio = 0.9;
    std::uint32_t batch_size = 1024;
    std::uint32_t n_batches = 64;
    std::uint64_t seed = 1;
};

// One probe replayed from a trace: starting table index and how many entries
// the recorded packet covered.
struct ReplayProbe {
    std::uint64_t index = 0;
    std::uint32_t entries = 0;
};

struct QueryBatch {
    std::vector<std::uint64_t> keys;
    std::vector<std::uint32_t> expected;      // kNotFoundValue marks "absent"
    std::vector<ReplayProbe> replay_probes;   // non-empty -> index replay mode

    bool index_replay() const { return !replay_probes.empty(); }
    std::size_t size() const { return index_replay() ? replay_probes.size() : keys.size(); }
};

// Exact zipf(alpha) sampler over ranks 1..n: cumulative table + binary
// search. alpha = 0 degenerates to uniform.
class ZipfSampler {
public:
    ZipfSampler(double alpha, std::uint64_t n_items);

    std::uint64_t sample(std::mt19937_64& rng) const;  // 1-based rank

    double alpha() const { return alpha_; }
    std::uint64_t n_items() const { return static_cast<std::uint64_t>(cdf_.size()); }
    // P(rank) from the same normalization the sampler uses.
    double pmf(std::uint64_t rank) const;

private:
    double alpha_;
    std::vector<double> cdf_;
};

// Deterministic per-seed batch stream over one table. Present keys are drawn
// from the stored keys (zipf ranks follow hash-slot order); absent keys are
// found by rejection.
class WorkloadGenerator {
public:
    WorkloadGenerator(const WorkloadSpec& spec, const HashTable& table);

    QueryBatch next_batch();
    std::vector<QueryBatch> all_batches();

private:
    WorkloadSpec spec_;
    const HashTable& table_;
    std::vector<std::uint64_t> ranked_keys_;
    ZipfSampler zipf_;
    std::mt19937_64 rng_;
};

}  // namespace nearsim
