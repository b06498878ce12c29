#include "nearsim/workload.hpp"

#include <algorithm>
#include <cmath>

#include "nearsim/rng.hpp"

namespace nearsim {

ZipfSampler::ZipfSampler(double alpha, std::uint64_t n_items) : alpha_(alpha) {
    if (n_items < 1) throw ConfigError("zipf: n_items must be >= 1");
    if (alpha < 0.0) throw ConfigError("zipf: alpha must be >= 0");
    cdf_.resize(n_items);
    double acc = 0.0;
    for (std::uint64_t i = 1; i <= n_items; ++i) {
        acc += std::pow(static_cast<double>(i), -alpha);
        cdf_[i - 1] = acc;
    }
    const double norm = 1.0 / acc;
    for (double& c : cdf_) c *= norm;
    cdf_.back() = 1.0;  // guard against rounding at the tail
}

std::uint64_t ZipfSampler::sample(std::mt19937_64& rng) const {
    const double u = rng_unit(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::uint64_t>(it - cdf_.begin()) + 1;
}

double ZipfSampler::pmf(std::uint64_t rank) const {
    if (rank < 1 || rank > cdf_.size()) return 0.0;
    const double lo = rank == 1 ? 0.0 : cdf_[rank - 2];
    return cdf_[rank - 1] - lo;
}

WorkloadGenerator::WorkloadGenerator(const WorkloadSpec& spec, const HashTable& table)
    : spec_(spec),
      table_(table),
      ranked_keys_(table.stored_keys_ranked()),
      zipf_(spec.distribution == Distribution::Zipf ? spec.zipf_alpha : 0.0,
            std::max<std::uint64_t>(ranked_keys_.size(), 1)),
      rng_(spec.seed) {
    if (spec.hit_ratio < 0.0 || spec.hit_ratio > 1.0) {
        throw ConfigError("workload.hit_ratio outside [0, 1]");
    }
    if (spec.hit_ratio > 0.0 && ranked_keys_.empty()) {
        throw ConfigError("workload: hit_ratio > 0 requires a non-empty table");
    }
}

QueryBatch WorkloadGenerator::next_batch() {
    QueryBatch batch;
    batch.keys.reserve(spec_.batch_size);
    batch.expected.reserve(spec_.batch_size);
    for (std::uint32_t i = 0; i < spec_.batch_size; ++i) {
        const bool hit = rng_unit(rng_) < spec_.hit_ratio;
        if (hit) {
            std::uint64_t rank;
            if (spec_.distribution == Distribution::Zipf) {
                rank = zipf_.sample(rng_);
            } else {
                rank = rng_below(rng_, ranked_keys_.size()) + 1;
            }
            const std::uint64_t key = ranked_keys_[rank - 1];
            batch.keys.push_back(key);
            batch.expected.push_back(table_.lookup(key).value);
        } else {
            // Rejection: draw until the key is genuinely absent.
            for (;;) {
                const std::uint64_t key = rng_();
                if (key == kReservedKey || table_.contains(key)) continue;
                batch.keys.push_back(key);
                batch.expected.push_back(kNotFoundValue);
                break;
            }
        }
    }
    return batch;
}

std::vector<QueryBatch> WorkloadGenerator::all_batches() {
    std::vector<QueryBatch> out;
    out.reserve(spec_.n_batches);
    for (std::uint32_t i = 0; i < spec_.n_batches; ++i) out.push_back(next_batch());
    return out;
}

}  // namespace nearsim
